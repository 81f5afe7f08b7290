#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmrnn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

enum class ErrorKind { dimension, config, numerical, domain, state, data, io };

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::config: return "configuration error";
    case ErrorKind::numerical: return "numerical error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::state: return "state error";
    case ErrorKind::data: return "data error";
    case ErrorKind::io: return "io error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

inline bool all_finite(const Eigen::Ref<const Mat>& m) { return m.allFinite(); }

// Softmax with max subtraction; shift invariant.
inline Vec softmax(const Vec& v) {
  require(v.size() > 0, ErrorKind::dimension, "softmax of empty vector");
  const double m = v.maxCoeff();
  Vec e = (v.array() - m).exp().matrix();
  return e / e.sum();
}

// Jacobian-transpose product of softmax: J^T g where J = diag(s) - s s^T.
inline Vec softmax_backward(const Vec& s, const Vec& g) {
  return (s.array() * (g.array() - s.dot(g))).matrix();
}

inline double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// |a - f| / max(|a|, |f|, 1e-8)
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

// Named parameter slots, each a matrix paired with a same-shape gradient
// accumulator. Vectors are stored as n x 1 matrices.
class ParamStore {
 public:
  struct Slot {
    std::string name;
    Mat value;
    Mat grad;
  };

  std::size_t add(std::string name, Mat value) {
    require(all_finite(value), ErrorKind::numerical, "non-finite initial value for " + name);
    Mat grad = Mat::Zero(value.rows(), value.cols());
    slots_.push_back({std::move(name), std::move(value), std::move(grad)});
    return slots_.size() - 1;
  }

  std::size_t size() const { return slots_.size(); }
  bool empty() const { return slots_.empty(); }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < slots_.size(); ++i)
      if (slots_[i].name == name) return i;
    throw Error(ErrorKind::state, "no parameter slot named " + std::string(name));
  }

  const Slot& slot(std::size_t i) const { return slots_.at(i); }
  Mat& value(std::size_t i) { return slots_.at(i).value; }
  const Mat& value(std::size_t i) const { return slots_.at(i).value; }
  Mat& grad(std::size_t i) { return slots_.at(i).grad; }
  const Mat& grad(std::size_t i) const { return slots_.at(i).grad; }

  auto begin() { return slots_.begin(); }
  auto end() { return slots_.end(); }
  auto begin() const { return slots_.begin(); }
  auto end() const { return slots_.end(); }

  void zero_grads() {
    for (auto& s : slots_) s.grad.setZero();
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& s : slots_) n += static_cast<std::size_t>(s.value.size());
    return n;
  }

  double squared_norm() const {
    double acc = 0.0;
    for (const auto& s : slots_) acc += s.value.squaredNorm();
    return acc;
  }

  bool operator==(const ParamStore& o) const {
    if (slots_.size() != o.slots_.size()) return false;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const auto& a = slots_[i];
      const auto& b = o.slots_[i];
      if (a.name != b.name || a.value.rows() != b.value.rows() ||
          a.value.cols() != b.value.cols())
        return false;
      if (!std::equal(a.value.data(), a.value.data() + a.value.size(), b.value.data()))
        return false;
    }
    return true;
  }

 private:
  std::vector<Slot> slots_;
};

// v <- v - lr * grad for every slot. Gradients are left untouched.
inline void sgd_step(ParamStore& store, double lr) {
  require(lr > 0.0 && std::isfinite(lr), ErrorKind::config, "learning rate must be positive");
  for (auto& s : store) s.value -= lr * s.grad;
}

// Central-difference gradient of loss_fn at store, one slot-shaped matrix per
// slot. The store is perturbed in place and restored exactly.
inline std::vector<Mat> finite_diff_grad(const std::function<double(const ParamStore&)>& loss_fn,
                                         ParamStore& store, double eps) {
  require(eps > 0.0, ErrorKind::config, "finite difference step must be positive");
  std::vector<Mat> out;
  out.reserve(store.size());
  for (std::size_t k = 0; k < store.size(); ++k) {
    Mat& v = store.value(k);
    Mat g(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double saved = v.data()[i];
      v.data()[i] = saved + eps;
      const double up = loss_fn(store);
      v.data()[i] = saved - eps;
      const double down = loss_fn(store);
      v.data()[i] = saved;
      require(std::isfinite(up) && std::isfinite(down), ErrorKind::numerical,
              "loss is not finite during finite differencing of " + store.slot(k).name);
      g.data()[i] = (up - down) / (2.0 * eps);
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline Mat uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale == 0.0 ? 0.0 : dist(rng);
  return m;
}

// Symmetric or general Dirichlet draw via normalized gammas.
inline Vec dirichlet(Rng& rng, Eigen::Index n, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  Vec v(n);
  double total = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gamma(rng);
    total = v.sum();
  } while (total <= 0.0);
  return v / total;
}

// Derive an independent stream seed from a base seed and a tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace mmrnn
