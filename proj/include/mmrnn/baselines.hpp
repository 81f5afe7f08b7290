#pragma once

#include "mmrnn/data.hpp"
#include "mmrnn/model.hpp"

#include <cmath>
#include <string>
#include <string_view>

namespace mmrnn {

enum class ImputeKind { mean, forward, zero };

struct ImputePolicy {
  ImputeKind kind = ImputeKind::zero;
};

// Everything needed to fill gaps the same way at training and prediction
// time: the policy plus the training corpus' global mean order.
struct ImputeContext {
  ImputePolicy policy;
  Vec global_mean;
};

inline Vec global_mean_order(const Dataset& ds) {
  require(ds.order_count() > 0, ErrorKind::data, "mean imputation needs non-empty training data");
  Vec acc = Vec::Zero(static_cast<Eigen::Index>(ds.item_count()));
  for (const auto& g : ds.groups)
    for (const auto& o : g.orders) acc += o.counts;
  return acc / static_cast<double>(ds.order_count());
}

inline int whole_days(double delta_t) {
  require(delta_t >= 0.0 && delta_t <= kMaxGapDays, ErrorKind::data,
          "gap of " + std::to_string(delta_t) + " days outside [0, 30]");
  const double r = std::round(delta_t);
  require(std::abs(r - delta_t) < 1e-9, ErrorKind::data, "imputation needs whole-day gaps");
  return static_cast<int>(r);
}

// The synthetic steps inserted before an order that arrives `days` days after
// `previous`. Each has delta_t = 1.
inline std::vector<Order> imputed_fill(const ImputeContext& ctx, const Order& previous, int days) {
  std::vector<Order> out;
  for (int k = 1; k < days; ++k) {
    Order o;
    o.delta_t = 1.0;
    switch (ctx.policy.kind) {
      case ImputeKind::mean: o.counts = ctx.global_mean; break;
      case ImputeKind::forward: o.counts = previous.counts; break;
      case ImputeKind::zero: o.counts = Vec::Zero(previous.counts.size()); break;
    }
    out.push_back(std::move(o));
  }
  return out;
}

// Expands every sequence to a daily grid. Real orders keep their counts;
// every step of the result has delta_t = 1. Same-day orders (gap 0) are kept
// and inserted nothing before them.
inline Dataset impute(const Dataset& ds, const ImputeContext& ctx) {
  if (ctx.policy.kind == ImputeKind::mean)
    require(ctx.global_mean.size() == static_cast<Eigen::Index>(ds.item_count()), ErrorKind::dimension,
            "global mean has wrong length");
  Dataset out;
  out.vocab = ds.vocab;
  out.regridded = true;
  for (const auto& g : ds.groups) {
    GroupSequence seq;
    seq.group_id = g.group_id;
    for (std::size_t t = 0; t < g.orders.size(); ++t) {
      if (t > 0) {
        auto fill = imputed_fill(ctx, g.orders[t - 1], whole_days(g.orders[t].delta_t));
        for (auto& o : fill) seq.orders.push_back(std::move(o));
      }
      Order real = g.orders[t];
      real.delta_t = 1.0;
      seq.orders.push_back(std::move(real));
    }
    out.groups.push_back(std::move(seq));
  }
  return out;
}

inline ImputeContext make_impute_context(const Dataset& train, ImputePolicy policy) {
  ImputeContext ctx{policy, Vec()};
  if (policy.kind == ImputeKind::mean) ctx.global_mean = global_mean_order(train);
  return ctx;
}

inline Dataset impute(const Dataset& ds, ImputePolicy policy) {
  return impute(ds, make_impute_context(ds, policy));
}

enum class Baseline { mmrnn, lstm, exchangeable, impute_mean, impute_forward, impute_zero };

inline std::string_view to_string(Baseline b) {
  switch (b) {
    case Baseline::mmrnn: return "mmrnn";
    case Baseline::lstm: return "lstm";
    case Baseline::exchangeable: return "exchangeable";
    case Baseline::impute_mean: return "impute-mean";
    case Baseline::impute_forward: return "impute-forward";
    case Baseline::impute_zero: return "impute-zero";
  }
  return "?";
}

inline Baseline baseline_from_string(std::string_view s) {
  for (Baseline b : {Baseline::mmrnn, Baseline::lstm, Baseline::exchangeable, Baseline::impute_mean,
                     Baseline::impute_forward, Baseline::impute_zero})
    if (to_string(b) == s) return b;
  throw Error(ErrorKind::config, "unknown baseline '" + std::string(s) + "'");
}

inline std::optional<ImputePolicy> impute_policy(Baseline b) {
  switch (b) {
    case Baseline::impute_mean: return ImputePolicy{ImputeKind::mean};
    case Baseline::impute_forward: return ImputePolicy{ImputeKind::forward};
    case Baseline::impute_zero: return ImputePolicy{ImputeKind::zero};
    default: return std::nullopt;
  }
}

// Model configuration for a comparison system. The vanilla LSTM is kappa = 0;
// the exchangeable model forces rho to 0 on every step; imputed corpora are
// always fed to the vanilla LSTM.
inline ModelConfig preset(Baseline kind, ModelConfig base) {
  switch (kind) {
    case Baseline::mmrnn: break;
    case Baseline::exchangeable: base.schedule = ScheduleKind::zero; break;
    case Baseline::lstm:
    case Baseline::impute_mean:
    case Baseline::impute_forward:
    case Baseline::impute_zero:
      base.schedule = ScheduleKind::power_law;
      base.decay.kappa = 0.0;
      break;
  }
  return base;
}

}  // namespace mmrnn
