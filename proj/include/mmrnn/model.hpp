#pragma once

#include "mmrnn/cells.hpp"
#include "mmrnn/data.hpp"
#include "mmrnn/decay.hpp"
#include "mmrnn/numerics.hpp"

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mmrnn {

enum class Mode { basic, topic };
enum class LossKind { l2, cross_entropy };

inline std::string to_string(Mode m) { return m == Mode::basic ? "basic" : "topic"; }
inline std::string to_string(LossKind l) { return l == LossKind::l2 ? "l2" : "cross_entropy"; }

inline constexpr double kLogFloor = 1e-12;

struct ModelConfig {
  Mode mode = Mode::basic;
  LossKind loss = LossKind::l2;
  std::size_t hidden = 10;
  // Combination dimension: the observation dimension in basic mode, the
  // topic count in topic mode.
  std::size_t K = 0;
  // Item count. Equal to K in basic mode.
  std::size_t V = 0;
  DecaySpec decay{};
  ScheduleKind schedule = ScheduleKind::power_law;
  // Prior variances on theta (a) and phi (b); noise variance (c).
  double a = 100.0;
  double b = 100.0;
  double c = 1.0;
  double init_scale = 0.1;

  std::size_t input_dim() const { return mode == Mode::basic ? K : V; }

  void validate() const {
    require(hidden >= 1, ErrorKind::config, "hidden size must be >= 1");
    require(K >= 1, ErrorKind::config, "combination dimension K must be >= 1");
    if (mode == Mode::basic)
      require(V == K, ErrorKind::config, "basic mode requires K equal to the observation dimension");
    else
      require(V >= K, ErrorKind::config, "topic mode requires V >= K");
    require(mode == Mode::basic || loss == LossKind::l2, ErrorKind::config,
            "cross-entropy loss is only defined in basic mode");
    require(a > 0.0 && b > 0.0 && c > 0.0, ErrorKind::config, "variances a, b, c must be positive");
    require(init_scale >= 0.0, ErrorKind::config, "init scale must be >= 0");
    decay.validate();
  }
};

struct GroupBias {
  GroupId group_id = 0;
  Vec phi;
};

// Nonnegative items x topics matrix; columns need not be normalized.
struct TopicMatrix {
  Mat B;

  Eigen::Index items() const { return B.rows(); }
  Eigen::Index topics() const { return B.cols(); }
  bool nonnegative() const { return B.size() == 0 || B.minCoeff() >= 0.0; }
};

struct StepPrediction {
  Vec v;       // pre-activation combination
  Vec sigma;   // softmax(v)
  Vec yhat;    // sigma in basic mode, n * B * sigma in topic mode
  double rho_used = 0.0;
  double n = 1.0;
};

// rho * h + (1 - rho) * phi, elementwise.
inline Vec combine(double rho_val, const Vec& h_proj, const Vec& phi) {
  require(h_proj.size() == phi.size(), ErrorKind::dimension, "combine: length mismatch");
  return rho_val * h_proj + (1.0 - rho_val) * phi;
}

inline Vec project_hidden(const Vec& h, const Mat& P) {
  require(P.cols() == h.size(), ErrorKind::dimension, "projection: shape mismatch");
  return P * h;
}

// Training target and count scale for one order.
inline Vec step_target(Mode mode, const Vec& counts) {
  return mode == Mode::basic ? normalized(counts) : counts;
}

template <RecurrentCell Cell>
struct ForwardTape {
  std::vector<typename Cell::Step> cell;
  std::vector<Vec> h;
};

// Walks one group's sequence: h_t from the cell with x_t the previous order's
// normalized counts (zero at t = 1), rho_t from the schedule with rho_1 = 0,
// then softmax of the combination and the mode's prediction.
template <RecurrentCell Cell>
std::vector<StepPrediction> forward_sequence(const ModelConfig& cfg, const DecaySchedule& schedule,
                                             const ParamStore& theta, const Vec& phi,
                                             const TopicMatrix* B, const GroupSequence& seq,
                                             ForwardTape<Cell>* tape = nullptr) {
  require(!seq.orders.empty(), ErrorKind::data, "empty sequence for group " + std::to_string(seq.group_id));
  require(cfg.mode == Mode::basic || B != nullptr, ErrorKind::state, "topic mode requires a topic matrix");
  const auto K = static_cast<Eigen::Index>(cfg.K);
  const auto X = static_cast<Eigen::Index>(cfg.input_dim());
  require(phi.size() == K, ErrorKind::dimension, "group bias has wrong length");
  if (B) require(B->items() == static_cast<Eigen::Index>(cfg.V) && B->topics() == K, ErrorKind::dimension,
                 "topic matrix shape mismatch");

  const typename Cell::Params cell = Cell::bind(theta, 0);
  const Mat& P = theta.value(Cell::slot_count);
  CellState state = CellState::zeros(static_cast<Eigen::Index>(cfg.hidden));
  Vec x = Vec::Zero(X);

  std::vector<StepPrediction> out;
  out.reserve(seq.orders.size());
  if (tape) {
    tape->cell.assign(seq.orders.size(), typename Cell::Step{});
    tape->h.assign(seq.orders.size(), Vec());
  }
  for (std::size_t t = 0; t < seq.orders.size(); ++t) {
    const Order& o = seq.orders[t];
    require(o.counts.size() == X, ErrorKind::dimension,
            "order vector length " + std::to_string(o.counts.size()) + " does not match model input " +
                std::to_string(X));
    state = Cell::forward(cell, x, state, tape ? &tape->cell[t] : nullptr);
    if (tape) tape->h[t] = state.h;

    StepPrediction p;
    p.rho_used = schedule(o.delta_t, t == 0);
    p.v = combine(p.rho_used, project_hidden(state.h, P), phi);
    p.sigma = softmax(p.v);
    if (cfg.mode == Mode::basic) {
      p.n = 1.0;
      p.yhat = p.sigma;
    } else {
      p.n = o.total();
      p.yhat = p.n * (B->B * p.sigma);
    }
    out.push_back(std::move(p));
    x = normalized(o.counts);
  }
  return out;
}

// Data term sum_t ||y_t - yhat_t||^2 / 2c. Basic mode compares against the
// normalized histogram.
inline double sequence_loss(const ModelConfig& cfg, const std::vector<StepPrediction>& preds,
                            const GroupSequence& seq) {
  require(preds.size() == seq.orders.size(), ErrorKind::state, "predictions not aligned with sequence");
  double acc = 0.0;
  for (std::size_t t = 0; t < preds.size(); ++t)
    acc += (step_target(cfg.mode, seq.orders[t].counts) - preds[t].yhat).squaredNorm();
  const double loss = acc / (2.0 * cfg.c);
  require(std::isfinite(loss), ErrorKind::numerical, "non-finite loss for group " + std::to_string(seq.group_id));
  return loss;
}

// sum_t -sum_i ybar_ti log(sigma_ti), log floored at 1e-12.
inline double cross_entropy_loss(const std::vector<StepPrediction>& preds, const GroupSequence& seq) {
  require(preds.size() == seq.orders.size(), ErrorKind::state, "predictions not aligned with sequence");
  double acc = 0.0;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    const Vec target = normalized(seq.orders[t].counts);
    for (Eigen::Index i = 0; i < target.size(); ++i)
      if (target[i] != 0.0) acc -= target[i] * std::log(std::max(preds[t].sigma[i], kLogFloor));
  }
  require(std::isfinite(acc), ErrorKind::numerical, "non-finite cross entropy for group " + std::to_string(seq.group_id));
  return acc;
}

inline double data_loss(const ModelConfig& cfg, const std::vector<StepPrediction>& preds,
                        const GroupSequence& seq) {
  return cfg.loss == LossKind::l2 ? sequence_loss(cfg, preds, seq) : cross_entropy_loss(preds, seq);
}

// Gradient of the data term with respect to sigma at one step.
inline Vec data_grad_sigma(const ModelConfig& cfg, const StepPrediction& p, const Vec& counts,
                           const TopicMatrix* B) {
  if (cfg.loss == LossKind::cross_entropy) {
    const Vec target = normalized(counts);
    Vec g = Vec::Zero(target.size());
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (target[i] != 0.0 && p.sigma[i] > kLogFloor) g[i] = -target[i] / p.sigma[i];
    return g;
  }
  const Vec resid = p.yhat - step_target(cfg.mode, counts);
  if (cfg.mode == Mode::basic) return resid / cfg.c;
  return (p.n / cfg.c) * (B->B.transpose() * resid);
}

// Reverse pass of the data term for one sequence. Adds theta gradients into
// theta's accumulators and returns the data-term gradient for phi.
template <RecurrentCell Cell>
Vec backward_sequence(const ModelConfig& cfg, ParamStore& theta, const TopicMatrix* B,
                      const GroupSequence& seq, const std::vector<StepPrediction>& preds,
                      const ForwardTape<Cell>& tape) {
  require(tape.cell.size() == seq.orders.size() && preds.size() == seq.orders.size(), ErrorKind::state,
          "forward tape does not match sequence");
  const std::size_t proj = Cell::slot_count;
  const Mat& P = theta.value(proj);
  Mat& dP = theta.grad(proj);
  Vec dphi = Vec::Zero(static_cast<Eigen::Index>(cfg.K));
  std::vector<Vec> dh(seq.orders.size());
  for (std::size_t t = 0; t < seq.orders.size(); ++t) {
    const StepPrediction& p = preds[t];
    const Vec gv = softmax_backward(p.sigma, data_grad_sigma(cfg, p, seq.orders[t].counts, B));
    dphi += (1.0 - p.rho_used) * gv;
    const Vec gh = p.rho_used * gv;
    dP.noalias() += gh * tape.h[t].transpose();
    dh[t] = P.transpose() * gh;
  }
  Cell::backward(Cell::bind(theta, 0), std::span<const typename Cell::Step>(tape.cell),
                 std::span<const Vec>(dh), theta, 0);
  return dphi;
}

// Model state: shared parameters theta (cell slots followed by the K x H
// projection "proj"), one bias per group, and the topic matrix in topic mode.
template <RecurrentCell Cell = LstmCell>
class MmRnn {
 public:
  using cell_type = Cell;

  MmRnn(ModelConfig cfg, std::uint64_t seed, const std::vector<GroupId>& groups,
        std::optional<TopicMatrix> topics = std::nullopt)
      : cfg_(std::move(cfg)) {
    cfg_.validate();
    schedule_ = make_schedule(cfg_.schedule, cfg_.decay);
    theta_ = Cell::init(derive_seed(seed, 10), cfg_.hidden, cfg_.input_dim(), cfg_.init_scale);
    Rng proj_rng(derive_seed(seed, 11));
    theta_.add("proj", uniform_matrix(proj_rng, static_cast<Eigen::Index>(cfg_.K),
                                      static_cast<Eigen::Index>(cfg_.hidden), cfg_.init_scale));
    for (GroupId g : groups) {
      require(index_.emplace(g, biases_.size()).second, ErrorKind::data,
              "duplicate group id " + std::to_string(g));
      biases_.push_back({g, Vec::Zero(static_cast<Eigen::Index>(cfg_.K))});
    }
    if (cfg_.mode == Mode::topic) {
      require(topics.has_value(), ErrorKind::config, "topic mode requires an initial topic matrix");
      require(topics->items() == static_cast<Eigen::Index>(cfg_.V) &&
                  topics->topics() == static_cast<Eigen::Index>(cfg_.K),
              ErrorKind::dimension, "initial topic matrix shape mismatch");
      require(topics->nonnegative(), ErrorKind::state, "topic matrix has negative entries");
      topics_ = std::move(topics);
    }
  }

  const ModelConfig& config() const { return cfg_; }
  const DecaySchedule& schedule() const { return *schedule_; }
  void set_schedule(std::shared_ptr<const DecaySchedule> s) { schedule_ = std::move(s); }

  ParamStore& theta() { return theta_; }
  const ParamStore& theta() const { return theta_; }
  std::vector<GroupBias>& biases() { return biases_; }
  const std::vector<GroupBias>& biases() const { return biases_; }
  const TopicMatrix* topics() const { return topics_ ? &*topics_ : nullptr; }
  TopicMatrix* topics() { return topics_ ? &*topics_ : nullptr; }

  std::size_t group_index(GroupId g) const {
    auto it = index_.find(g);
    if (it == index_.end()) throw Error(ErrorKind::data, "unknown group " + std::to_string(g));
    return it->second;
  }
  const Vec& phi(GroupId g) const { return biases_[group_index(g)].phi; }

  std::vector<StepPrediction> forward(const GroupSequence& seq, ForwardTape<Cell>* tape = nullptr) const {
    return forward_sequence<Cell>(cfg_, *schedule_, theta_, phi(seq.group_id), topics(), seq, tape);
  }

  double regularizer() const {
    double phi_sq = 0.0;
    for (const auto& b : biases_) phi_sq += b.phi.squaredNorm();
    return theta_.squared_norm() / (2.0 * cfg_.a) + phi_sq / (2.0 * cfg_.b);
  }

  // Full objective: regularizers plus every group's data term.
  double objective(const Dataset& ds) const {
    double total = regularizer();
    for (const auto& seq : ds.groups) total += data_loss(cfg_, forward(seq), seq);
    return total;
  }

  // Gradient of the data term for one sequence: theta gradients are added to
  // theta's accumulators, the phi gradient is returned.
  Vec accumulate_data_gradient(const GroupSequence& seq, double* loss = nullptr) {
    ForwardTape<Cell> tape;
    const auto preds = forward(seq, &tape);
    if (loss) *loss = data_loss(cfg_, preds, seq);
    return backward_sequence<Cell>(cfg_, theta_, topics(), seq, preds, tape);
  }

  // Full-objective gradients: theta's accumulators are overwritten and one
  // phi gradient per group is returned (in bias order).
  std::vector<Vec> full_gradient(const Dataset& ds) {
    theta_.zero_grads();
    std::vector<Vec> dphi(biases_.size());
    for (std::size_t i = 0; i < biases_.size(); ++i) dphi[i] = biases_[i].phi / cfg_.b;
    for (const auto& seq : ds.groups) dphi[group_index(seq.group_id)] += accumulate_data_gradient(seq);
    for (auto& s : theta_) s.grad += s.value / cfg_.a;
    return dphi;
  }

  // Bitwise comparison of all learned state.
  bool same_parameters(const MmRnn& o) const {
    if (!(theta_ == o.theta_) || biases_.size() != o.biases_.size()) return false;
    for (std::size_t i = 0; i < biases_.size(); ++i)
      if (biases_[i].group_id != o.biases_[i].group_id || biases_[i].phi.size() != o.biases_[i].phi.size() ||
          !std::equal(biases_[i].phi.data(), biases_[i].phi.data() + biases_[i].phi.size(), o.biases_[i].phi.data()))
        return false;
    if (topics_.has_value() != o.topics_.has_value()) return false;
    if (topics_ && !std::equal(topics_->B.data(), topics_->B.data() + topics_->B.size(), o.topics_->B.data()))
      return false;
    return true;
  }

 private:
  ModelConfig cfg_;
  std::shared_ptr<const DecaySchedule> schedule_;
  ParamStore theta_;
  std::vector<GroupBias> biases_;
  std::unordered_map<GroupId, std::size_t> index_;
  std::optional<TopicMatrix> topics_;
};

inline std::vector<GroupId> group_ids(const Dataset& ds) {
  std::vector<GroupId> ids;
  ids.reserve(ds.groups.size());
  for (const auto& g : ds.groups) ids.push_back(g.group_id);
  return ids;
}

}  // namespace mmrnn
