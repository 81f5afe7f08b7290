#pragma once

#include "mmrnn/model.hpp"

#include <chrono>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>

namespace mmrnn {

struct TrainConfig {
  double lr = 0.01;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  bool update_B = true;
  std::size_t nmf_inner_iters = 1;
  bool shuffle = false;
  // Groups per theta step; 0 takes one full-batch theta step per epoch.
  std::size_t batch_groups = 0;
  // Called after every epoch with (epoch, objective).
  std::function<void(std::size_t, double)> on_epoch;

  void validate() const {
    require(std::isfinite(lr) && lr >= 0.0, ErrorKind::config, "learning rate must be >= 0");
    require(epochs >= 1, ErrorKind::config, "epochs must be >= 1");
    require(nmf_inner_iters >= 1, ErrorKind::config, "nmf_inner_iters must be >= 1");
  }
};

struct TrainTrace {
  std::vector<double> objective;  // full objective after each epoch
  std::vector<double> seconds;    // wall time of each epoch
};

inline constexpr double kNmfFloor = 1e-10;

// Initial topic matrix: Dirichlet(1) columns.
inline TopicMatrix init_topics(std::size_t items, std::size_t topics, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 12));
  TopicMatrix t{Mat(static_cast<Eigen::Index>(items), static_cast<Eigen::Index>(topics))};
  for (Eigen::Index k = 0; k < t.B.cols(); ++k) t.B.col(k) = dirichlet(rng, t.B.rows(), 1.0);
  return t;
}

// Multiplicative Frobenius update given the sufficient statistics
// Y Sigma^T (V x K) and Sigma Sigma^T (K x K).
inline TopicMatrix nmf_update_B_gram(const TopicMatrix& B, const Mat& y_sigma_t, const Mat& sigma_sigma_t) {
  require(B.nonnegative(), ErrorKind::state, "topic matrix has negative entries");
  require(y_sigma_t.rows() == B.items() && y_sigma_t.cols() == B.topics() &&
              sigma_sigma_t.rows() == B.topics() && sigma_sigma_t.cols() == B.topics(),
          ErrorKind::dimension, "NMF statistics shape mismatch");
  const Mat denom = B.B * sigma_sigma_t;
  TopicMatrix out{B.B};
  for (Eigen::Index i = 0; i < out.B.size(); ++i)
    out.B.data()[i] *= y_sigma_t.data()[i] / std::max(denom.data()[i], kNmfFloor);
  return out;
}

// B <- B .* (Y Sigma^T) ./ (B Sigma Sigma^T)
inline TopicMatrix nmf_update_B(const TopicMatrix& B, const Mat& Sigma, const Mat& Y) {
  require(Sigma.rows() == B.topics() && Y.rows() == B.items() && Sigma.cols() == Y.cols(),
          ErrorKind::dimension, "NMF input shapes mismatch");
  require(Sigma.size() == 0 || Sigma.minCoeff() >= 0.0, ErrorKind::state, "negative entry in Sigma");
  require(Y.size() == 0 || Y.minCoeff() >= 0.0, ErrorKind::state, "negative entry in Y");
  return nmf_update_B_gram(B, Y * Sigma.transpose(), Sigma * Sigma.transpose());
}

inline double frobenius_error(const TopicMatrix& B, const Mat& Sigma, const Mat& Y) {
  return (Y - B.B * Sigma).norm();
}

// Gradient of the full objective with respect to one group's bias:
// sum_t (1 - rho_t) J_sigma^T dL/dsigma_t + phi_d / b.
template <RecurrentCell Cell>
Vec phi_gradient(const MmRnn<Cell>& model, const GroupSequence& seq) {
  ParamStore scratch = model.theta();
  ForwardTape<Cell> tape;
  const auto preds = model.forward(seq, &tape);
  const Vec data = backward_sequence<Cell>(model.config(), scratch, model.topics(), seq, preds, tape);
  return data + model.phi(seq.group_id) / model.config().b;
}

namespace detail {

inline void check_dataset(const ModelConfig& cfg, const Dataset& ds) {
  require(!ds.groups.empty(), ErrorKind::data, "training dataset is empty");
  for (const auto& g : ds.groups) {
    require(!g.orders.empty(), ErrorKind::data, "group " + std::to_string(g.group_id) + " has no orders");
    for (const auto& o : g.orders)
      require(o.counts.size() == static_cast<Eigen::Index>(cfg.input_dim()), ErrorKind::dimension,
              "group " + std::to_string(g.group_id) + " has vectors of length " +
                  std::to_string(o.counts.size()) + ", model expects " + std::to_string(cfg.input_dim()));
  }
}

}  // namespace detail

// Alternating MAP optimisation. Each epoch: one gradient step per group bias
// during a sweep over groups (theta gradients accumulated on the way), theta
// steps (one full-batch step unless batch_groups is set), then optionally
// multiplicative updates of B from a fresh forward sweep. The objective is
// recorded after every epoch.
template <RecurrentCell Cell>
TrainTrace train(MmRnn<Cell>& model, const Dataset& ds, const TrainConfig& tc) {
  tc.validate();
  const ModelConfig& cfg = model.config();
  detail::check_dataset(cfg, ds);
  const bool learn_B = tc.update_B && cfg.mode == Mode::topic && model.topics() != nullptr;
  const bool step = tc.lr > 0.0;
  const auto D = ds.groups.size();
  const auto K = static_cast<Eigen::Index>(cfg.K);
  const auto V = static_cast<Eigen::Index>(cfg.V);

  std::vector<std::size_t> bias_of(D);
  for (std::size_t i = 0; i < D; ++i) bias_of[i] = model.group_index(ds.groups[i].group_id);

  TrainTrace trace;
  std::vector<std::size_t> order(D);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(tc.seed, 20));

  auto theta_step = [&](std::size_t groups_in_step) {
    const double frac = static_cast<double>(groups_in_step) / static_cast<double>(D);
    for (auto& s : model.theta()) s.grad += (frac / cfg.a) * s.value;
    if (step) sgd_step(model.theta(), tc.lr);
    model.theta().zero_grads();
  };

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (tc.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);

    model.theta().zero_grads();
    std::size_t pending = 0;
    for (std::size_t idx : order) {
      const GroupSequence& seq = ds.groups[idx];
      Vec& phi = model.biases()[bias_of[idx]].phi;
      const Vec dphi = model.accumulate_data_gradient(seq) + phi / cfg.b;
      if (step) phi -= tc.lr * dphi;
      require(phi.allFinite(), ErrorKind::numerical,
              "non-finite bias for group " + std::to_string(seq.group_id) + " in epoch " + std::to_string(epoch + 1));
      if (++pending == tc.batch_groups) {
        theta_step(pending);
        pending = 0;
      }
    }
    if (pending > 0) theta_step(pending);

    // Fresh sweep with the updated theta and phi; sigma is frozen for the
    // topic update and reused for the objective.
    std::vector<std::vector<StepPrediction>> preds(D);
    for (std::size_t i = 0; i < D; ++i) preds[i] = model.forward(ds.groups[i]);

    if (learn_B) {
      Mat y_st = Mat::Zero(V, K);
      Mat s_st = Mat::Zero(K, K);
      for (std::size_t i = 0; i < D; ++i)
        for (std::size_t t = 0; t < preds[i].size(); ++t) {
          const Vec s = preds[i][t].n * preds[i][t].sigma;
          y_st.noalias() += ds.groups[i].orders[t].counts * s.transpose();
          s_st.noalias() += s * s.transpose();
        }
      TopicMatrix& B = *model.topics();
      for (std::size_t it = 0; it < tc.nmf_inner_iters; ++it) B = nmf_update_B_gram(B, y_st, s_st);
      for (auto& ps : preds)
        for (auto& p : ps) p.yhat = p.n * (B.B * p.sigma);
    }

    double objective = model.regularizer();
    for (std::size_t i = 0; i < D; ++i) {
      double term = 0.0;
      try {
        term = data_loss(cfg, preds[i], ds.groups[i]);
      } catch (const Error&) {
        term = std::numeric_limits<double>::quiet_NaN();
      }
      require(std::isfinite(term), ErrorKind::numerical,
              "objective diverged at group " + std::to_string(ds.groups[i].group_id) + " in epoch " +
                  std::to_string(epoch + 1));
      objective += term;
    }
    if (!std::isfinite(objective)) {
      for (const auto& b : model.biases())
        require(std::isfinite(b.phi.squaredNorm()), ErrorKind::numerical,
                "objective diverged: bias of group " + std::to_string(b.group_id) + " in epoch " +
                    std::to_string(epoch + 1));
      for (const auto& s : model.theta())
        require(std::isfinite(s.value.squaredNorm()), ErrorKind::numerical,
                "objective diverged: parameter " + s.name + " in epoch " + std::to_string(epoch + 1));
      throw Error(ErrorKind::numerical, "objective diverged in epoch " + std::to_string(epoch + 1));
    }

    trace.objective.push_back(objective);
    trace.seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (tc.on_epoch) tc.on_epoch(epoch + 1, objective);
  }
  return trace;
}

}  // namespace mmrnn
