#pragma once

#include "mmrnn/numerics.hpp"
#include "mmrnn/decay.hpp"
#include "mmrnn/cells.hpp"
#include "mmrnn/data.hpp"
#include "mmrnn/model.hpp"
#include "mmrnn/training.hpp"
#include "mmrnn/baselines.hpp"
#include "mmrnn/eval.hpp"
#include "mmrnn/persist.hpp"
