#pragma once

#include "mmrnn/numerics.hpp"

#include <concepts>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mmrnn {

struct CellState {
  Vec h;
  Vec c;

  static CellState zeros(Eigen::Index hidden) { return {Vec::Zero(hidden), Vec::Zero(hidden)}; }
};

// Gate blocks in W, U, b are stacked input / forget / candidate / output.
struct LstmParams {
  const Mat& W;  // 4H x X
  const Mat& U;  // 4H x H
  const Mat& b;  // 4H x 1

  Eigen::Index hidden() const { return U.cols(); }
  Eigen::Index input() const { return W.cols(); }
};

struct LstmGrads {
  Mat& W;
  Mat& U;
  Mat& b;
};

// Everything the backward pass needs from one forward step.
struct LstmStep {
  Vec x, h_prev, c_prev;
  Vec i, f, g, o;
  Vec c, tanh_c;
};

inline ParamStore lstm_init(std::uint64_t seed, std::size_t hidden, std::size_t input, double scale) {
  require(hidden >= 1 && input >= 1, ErrorKind::config, "LSTM dimensions must be >= 1");
  require(scale >= 0.0 && std::isfinite(scale), ErrorKind::config, "init scale must be >= 0");
  const auto H = static_cast<Eigen::Index>(hidden);
  const auto X = static_cast<Eigen::Index>(input);
  Rng rng(seed);
  ParamStore store;
  store.add("lstm.W", uniform_matrix(rng, 4 * H, X, scale));
  store.add("lstm.U", uniform_matrix(rng, 4 * H, H, scale));
  Mat b = uniform_matrix(rng, 4 * H, 1, scale);
  if (scale > 0.0) b.block(H, 0, H, 1).array() += 1.0;  // forget gate
  store.add("lstm.b", std::move(b));
  return store;
}

inline CellState lstm_forward(const LstmParams& p, const Vec& x, const CellState& s,
                              LstmStep* cache = nullptr) {
  const Eigen::Index H = p.hidden();
  require(x.size() == p.input(), ErrorKind::dimension, "LSTM input size mismatch");
  require(s.h.size() == H && s.c.size() == H, ErrorKind::dimension, "LSTM state size mismatch");
  require(p.W.rows() == 4 * H && p.U.rows() == 4 * H && p.b.rows() == 4 * H && p.b.cols() == 1,
          ErrorKind::dimension, "LSTM parameter shapes inconsistent");

  const Vec z = p.W * x + p.U * s.h + p.b.col(0);
  Vec i = z.segment(0, H).unaryExpr([](double v) { return logistic(v); });
  Vec f = z.segment(H, H).unaryExpr([](double v) { return logistic(v); });
  Vec g = z.segment(2 * H, H).array().tanh().matrix();
  Vec o = z.segment(3 * H, H).unaryExpr([](double v) { return logistic(v); });

  CellState out;
  out.c = (f.array() * s.c.array() + i.array() * g.array()).matrix();
  Vec tanh_c = out.c.array().tanh().matrix();
  out.h = (o.array() * tanh_c.array()).matrix();

  if (cache) {
    cache->x = x;
    cache->h_prev = s.h;
    cache->c_prev = s.c;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->c = out.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return out;
}

// Full BPTT over a cached sequence. dh[t] is the gradient of the loss with
// respect to h_t coming from outside the recurrence. Parameter gradients are
// accumulated (added) into `grads`; per-step input gradients go to dx when
// requested.
inline void lstm_backward(const LstmParams& p, std::span<const LstmStep> tape,
                          std::span<const Vec> dh, LstmGrads grads,
                          std::vector<Vec>* dx = nullptr) {
  require(tape.size() == dh.size(), ErrorKind::state,
          "tape has " + std::to_string(tape.size()) + " steps but " +
              std::to_string(dh.size()) + " upstream gradients");
  const Eigen::Index H = p.hidden();
  if (dx) dx->assign(tape.size(), Vec());

  Vec dh_next = Vec::Zero(H);
  Vec dc_next = Vec::Zero(H);
  Vec dz(4 * H);
  for (std::size_t k = tape.size(); k-- > 0;) {
    const LstmStep& s = tape[k];
    require(dh[k].size() == H, ErrorKind::dimension, "upstream gradient size mismatch");
    const Vec dht = dh[k] + dh_next;
    const Vec dc = (dc_next.array() +
                    dht.array() * s.o.array() * (1.0 - s.tanh_c.array().square()))
                       .matrix();
    dz.segment(0, H) = (dc.array() * s.g.array() * s.i.array() * (1.0 - s.i.array())).matrix();
    dz.segment(H, H) =
        (dc.array() * s.c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
    dz.segment(2 * H, H) = (dc.array() * s.i.array() * (1.0 - s.g.array().square())).matrix();
    dz.segment(3 * H, H) =
        (dht.array() * s.tanh_c.array() * s.o.array() * (1.0 - s.o.array())).matrix();

    grads.W.noalias() += dz * s.x.transpose();
    grads.U.noalias() += dz * s.h_prev.transpose();
    grads.b.col(0) += dz;
    if (dx) (*dx)[k] = p.W.transpose() * dz;
    dh_next = p.U.transpose() * dz;
    dc_next = (dc.array() * s.f.array()).matrix();
  }
}

// Plain tanh recurrence h' = tanh(W x + U h + b); the cell memory is unused
// and carried through unchanged.
struct TanhRnnStep {
  Vec x, h_prev, h;
};

inline ParamStore tanh_rnn_init(std::uint64_t seed, std::size_t hidden, std::size_t input,
                                double scale) {
  require(hidden >= 1 && input >= 1, ErrorKind::config, "RNN dimensions must be >= 1");
  require(scale >= 0.0 && std::isfinite(scale), ErrorKind::config, "init scale must be >= 0");
  const auto H = static_cast<Eigen::Index>(hidden);
  const auto X = static_cast<Eigen::Index>(input);
  Rng rng(seed);
  ParamStore store;
  store.add("rnn.W", uniform_matrix(rng, H, X, scale));
  store.add("rnn.U", uniform_matrix(rng, H, H, scale));
  store.add("rnn.b", uniform_matrix(rng, H, 1, scale));
  return store;
}

struct TanhRnnParams {
  const Mat& W;
  const Mat& U;
  const Mat& b;

  Eigen::Index hidden() const { return U.cols(); }
  Eigen::Index input() const { return W.cols(); }
};

// Cell adaptors with a uniform static interface so the model can be
// instantiated over either recurrence.
struct LstmCell {
  using Params = LstmParams;
  using Step = LstmStep;
  static constexpr std::string_view name = "lstm";
  static constexpr std::size_t slot_count = 3;

  static ParamStore init(std::uint64_t seed, std::size_t hidden, std::size_t input, double scale) {
    return lstm_init(seed, hidden, input, scale);
  }
  static Params bind(const ParamStore& s, std::size_t first) {
    return {s.value(first), s.value(first + 1), s.value(first + 2)};
  }
  static CellState forward(const Params& p, const Vec& x, const CellState& s, Step* cache) {
    return lstm_forward(p, x, s, cache);
  }
  static void backward(const Params& p, std::span<const Step> tape, std::span<const Vec> dh,
                       ParamStore& store, std::size_t first, std::vector<Vec>* dx = nullptr) {
    lstm_backward(p, tape, dh, {store.grad(first), store.grad(first + 1), store.grad(first + 2)},
                  dx);
  }
};

struct TanhRnnCell {
  using Params = TanhRnnParams;
  using Step = TanhRnnStep;
  static constexpr std::string_view name = "rnn";
  static constexpr std::size_t slot_count = 3;

  static ParamStore init(std::uint64_t seed, std::size_t hidden, std::size_t input, double scale) {
    return tanh_rnn_init(seed, hidden, input, scale);
  }
  static Params bind(const ParamStore& s, std::size_t first) {
    return {s.value(first), s.value(first + 1), s.value(first + 2)};
  }
  static CellState forward(const Params& p, const Vec& x, const CellState& s, Step* cache) {
    require(x.size() == p.input() && s.h.size() == p.hidden(), ErrorKind::dimension,
            "RNN input or state size mismatch");
    CellState out{(p.W * x + p.U * s.h + p.b.col(0)).array().tanh().matrix(), s.c};
    if (cache) *cache = {x, s.h, out.h};
    return out;
  }
  static void backward(const Params& p, std::span<const Step> tape, std::span<const Vec> dh,
                       ParamStore& store, std::size_t first, std::vector<Vec>* dx = nullptr) {
    require(tape.size() == dh.size(), ErrorKind::state, "tape/gradient step count mismatch");
    if (dx) dx->assign(tape.size(), Vec());
    Vec dh_next = Vec::Zero(p.hidden());
    for (std::size_t k = tape.size(); k-- > 0;) {
      const Step& s = tape[k];
      const Vec dz = ((dh[k] + dh_next).array() * (1.0 - s.h.array().square())).matrix();
      store.grad(first).noalias() += dz * s.x.transpose();
      store.grad(first + 1).noalias() += dz * s.h_prev.transpose();
      store.grad(first + 2).col(0) += dz;
      if (dx) (*dx)[k] = p.W.transpose() * dz;
      dh_next = p.U.transpose() * dz;
    }
  }
};

template <class C>
concept RecurrentCell = requires(const ParamStore& cs, ParamStore& ms, const Vec& x,
                                 const CellState& s, typename C::Step* step,
                                 std::span<const typename C::Step> tape,
                                 std::span<const Vec> dh) {
  { C::name } -> std::convertible_to<std::string_view>;
  { C::slot_count } -> std::convertible_to<std::size_t>;
  { C::init(std::uint64_t{}, std::size_t{}, std::size_t{}, double{}) } -> std::same_as<ParamStore>;
  { C::forward(C::bind(cs, 0), x, s, step) } -> std::same_as<CellState>;
  C::backward(C::bind(cs, 0), tape, dh, ms, std::size_t{});
};

static_assert(RecurrentCell<LstmCell>);
static_assert(RecurrentCell<TanhRnnCell>);

}  // namespace mmrnn
