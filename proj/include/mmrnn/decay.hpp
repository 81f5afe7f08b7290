#pragma once

#include "mmrnn/numerics.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace mmrnn {

// Parameters of the power-law forgetting schedule rho(dt) = (t0 + dt)^-kappa.
// t0 >= 1 keeps rho inside [0, 1] for every non-negative gap.
struct DecaySpec {
  double t0 = 1.0;
  double kappa = 0.1;

  void validate() const {
    require(std::isfinite(t0) && t0 >= 1.0, ErrorKind::config,
            "t0 must be >= 1 (got " + std::to_string(t0) + ")");
    require(std::isfinite(kappa) && kappa >= 0.0, ErrorKind::config,
            "kappa must be >= 0 (got " + std::to_string(kappa) + ")");
  }
};

// Any non-increasing map from a gap (days) to [0, 1]. The first step of a
// sequence always has weight 0 regardless of the schedule.
class DecaySchedule {
 public:
  virtual ~DecaySchedule() = default;
  virtual double weight(double delta_t) const = 0;

  double operator()(double delta_t, bool is_first_step) const {
    require(delta_t >= 0.0, ErrorKind::domain,
            "negative time gap " + std::to_string(delta_t));
    if (is_first_step) return 0.0;
    return weight(delta_t);
  }
};

class PowerLawDecay final : public DecaySchedule {
 public:
  explicit PowerLawDecay(DecaySpec spec) : spec_(spec) { spec_.validate(); }

  double weight(double delta_t) const override {
    if (spec_.kappa == 0.0) return 1.0;
    return std::pow(spec_.t0 + delta_t, -spec_.kappa);
  }

  const DecaySpec& spec() const { return spec_; }

 private:
  DecaySpec spec_;
};

// rho == 0 everywhere: the exchangeable reduction.
class ZeroDecay final : public DecaySchedule {
 public:
  double weight(double) const override { return 0.0; }
};

inline double rho(const DecaySpec& spec, double delta_t, bool is_first_step) {
  return PowerLawDecay(spec)(delta_t, is_first_step);
}

enum class ScheduleKind { power_law, zero };

inline std::unique_ptr<DecaySchedule> make_schedule(ScheduleKind kind, const DecaySpec& spec) {
  if (kind == ScheduleKind::zero) return std::make_unique<ZeroDecay>();
  return std::make_unique<PowerLawDecay>(spec);
}

}  // namespace mmrnn
