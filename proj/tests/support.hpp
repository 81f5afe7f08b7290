#pragma once

#include "mmrnn/mmrnn.hpp"

#include <random>

namespace mmrnn::testing {

// Small random corpus of count vectors over `items` items.
inline Dataset random_dataset(Rng& rng, std::size_t groups, std::size_t min_len, std::size_t max_len,
                              std::size_t items, int max_count = 4) {
  Dataset ds;
  for (std::size_t i = 0; i < items; ++i) ds.vocab.add(static_cast<ItemId>(i + 1));
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> gap(0, 30);
  std::uniform_int_distribution<int> count(0, max_count);
  std::uniform_int_distribution<Eigen::Index> pick(0, static_cast<Eigen::Index>(items) - 1);
  for (std::size_t g = 0; g < groups; ++g) {
    GroupSequence seq;
    seq.group_id = static_cast<GroupId>(100 + g);
    const std::size_t T = len(rng);
    for (std::size_t t = 0; t < T; ++t) {
      Order o;
      o.delta_t = t == 0 ? 0.0 : gap(rng);
      o.counts = Vec::Zero(static_cast<Eigen::Index>(items));
      for (Eigen::Index i = 0; i < o.counts.size(); ++i) o.counts[i] = count(rng);
      if (o.total() == 0.0) o.counts[pick(rng)] = 1.0;
      seq.orders.push_back(std::move(o));
    }
    ds.groups.push_back(std::move(seq));
  }
  return ds;
}

inline ModelConfig small_config(Mode mode, LossKind loss, std::size_t H, std::size_t K, std::size_t V) {
  ModelConfig cfg;
  cfg.mode = mode;
  cfg.loss = loss;
  cfg.hidden = H;
  cfg.K = K;
  cfg.V = mode == Mode::basic ? K : V;
  cfg.init_scale = 0.5;
  cfg.decay = {1.5, 0.4};
  return cfg;
}

template <RecurrentCell Cell = LstmCell>
MmRnn<Cell> random_model(const ModelConfig& cfg, const Dataset& ds, std::uint64_t seed) {
  std::optional<TopicMatrix> topics;
  if (cfg.mode == Mode::topic) topics = init_topics(cfg.V, cfg.K, seed);
  MmRnn<Cell> m(cfg, seed, group_ids(ds), std::move(topics));
  Rng rng(derive_seed(seed, 99));
  std::normal_distribution<double> n(0.0, 0.7);
  for (auto& b : m.biases())
    for (Eigen::Index k = 0; k < b.phi.size(); ++k) b.phi[k] = n(rng);
  return m;
}

struct GradCheck {
  double max_rel = 0.0;
  std::size_t checked = 0;
};

// Compares full-objective gradients against central differences of the
// objective over every theta entry and every group bias.
template <RecurrentCell Cell>
GradCheck check_full_gradient(MmRnn<Cell>& model, const Dataset& ds, double eps = 1e-5) {
  const std::vector<Vec> dphi = model.full_gradient(ds);

  ParamStore all;
  for (const auto& s : model.theta()) all.add(s.name, s.value);
  for (std::size_t i = 0; i < model.biases().size(); ++i)
    all.add("phi" + std::to_string(i), Mat(model.biases()[i].phi));

  MmRnn<Cell> probe = model;
  const std::size_t nt = model.theta().size();
  auto loss = [&](const ParamStore& p) {
    for (std::size_t k = 0; k < nt; ++k) probe.theta().value(k) = p.value(k);
    for (std::size_t i = 0; i < probe.biases().size(); ++i) probe.biases()[i].phi = p.value(nt + i);
    return probe.objective(ds);
  };
  const auto fd = finite_diff_grad(loss, all, eps);

  GradCheck out;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const Mat analytic = k < nt ? model.theta().grad(k) : Mat(dphi[k - nt]);
    for (Eigen::Index e = 0; e < analytic.size(); ++e) {
      out.max_rel = std::max(out.max_rel, relative_error(analytic.data()[e], fd[k].data()[e]));
      ++out.checked;
    }
  }
  return out;
}

}  // namespace mmrnn::testing
