#pragma once

#include "mmrnn/baselines.hpp"
#include "mmrnn/data.hpp"
#include "mmrnn/model.hpp"
#include "mmrnn/training.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

namespace mmrnn {

// Bucket label used for held-out orders without a gap. The holdout split
// never produces one.
inline constexpr int kFirstOrderBucket = -1;

struct LagBucket {
  int delta_t = 0;
  std::size_t count = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
};

struct EvalReport {
  Mode mode = Mode::basic;
  std::string normalization;  // "none" or "per-item"
  std::vector<GroupId> group_ids;
  std::vector<double> gaps;
  std::vector<double> errors;
  double overall_mean = 0.0;
  double overall_std = 0.0;
  std::vector<LagBucket> buckets;  // non-empty buckets, ascending delta_t
};

namespace detail {

// Population mean and standard deviation.
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace detail

inline int lag_bucket_of(double delta_t, bool has_gap) {
  if (!has_gap) return kFirstOrderBucket;
  return static_cast<int>(std::clamp(std::round(delta_t), 0.0, kMaxGapDays));
}

// Fills overall and bucket statistics from per-group errors and gaps.
inline void summarize(EvalReport& r) {
  std::tie(r.overall_mean, r.overall_std) = detail::mean_std(r.errors);
  std::map<int, std::vector<double>> by;
  for (std::size_t i = 0; i < r.errors.size(); ++i) by[lag_bucket_of(r.gaps[i], true)].push_back(r.errors[i]);
  r.buckets.clear();
  for (const auto& [lag, errs] : by) {
    const auto [m, s] = detail::mean_std(errs);
    r.buckets.push_back({lag, errs.size(), m, s});
  }
}

// Squared error of one held-out prediction: on normalized histograms in
// basic mode, on raw counts divided by the item count in topic mode.
inline double holdout_error(Mode mode, const Order& target, const StepPrediction& p) {
  if (mode == Mode::basic) return (normalized(target.counts) - p.sigma).squaredNorm();
  return (target.counts - p.yhat).squaredNorm() / static_cast<double>(target.counts.size());
}

// Predicts each held-out order from its group's training sequence and the
// held-out gap. With an impute context the gap is first filled the same way
// the training corpus was.
template <RecurrentCell Cell>
EvalReport evaluate_holdout(const MmRnn<Cell>& model, const Dataset& train,
                            const std::vector<HoldoutOrder>& holdout,
                            const ImputeContext* impute_ctx = nullptr) {
  EvalReport r;
  r.mode = model.config().mode;
  r.normalization = r.mode == Mode::basic ? "none" : "per-item";
  for (const HoldoutOrder& h : holdout) {
    require(h.train_group < train.groups.size() && train.groups[h.train_group].group_id == h.group_id,
            ErrorKind::data, "holdout order for group " + std::to_string(h.group_id) + " not aligned with training data");
    require(h.order.counts.size() == static_cast<Eigen::Index>(model.config().input_dim()), ErrorKind::dimension,
            "held-out order length does not match model");
    GroupSequence ext = train.groups[h.train_group];
    Order target = h.order;
    if (impute_ctx) {
      auto fill = imputed_fill(*impute_ctx, ext.orders.back(), whole_days(h.order.delta_t));
      for (auto& o : fill) ext.orders.push_back(std::move(o));
      target.delta_t = 1.0;
    }
    ext.orders.push_back(target);
    const auto preds = model.forward(ext);
    r.group_ids.push_back(h.group_id);
    r.gaps.push_back(h.order.delta_t);
    r.errors.push_back(holdout_error(r.mode, h.order, preds.back()));
  }
  summarize(r);
  return r;
}

// ---------------------------------------------------------------------------
// Experiments

struct RunResult {
  TrainTrace trace;
  EvalReport report;
  double wall_seconds = 0.0;
};

template <RecurrentCell Cell = LstmCell>
MmRnn<Cell> make_model(const ModelConfig& cfg, const Dataset& train, std::uint64_t seed) {
  std::optional<TopicMatrix> topics;
  if (cfg.mode == Mode::topic) topics = init_topics(cfg.V, cfg.K, seed);
  return MmRnn<Cell>(cfg, seed, group_ids(train), std::move(topics));
}

// Train one configuration from `seed` and evaluate it on the holdout.
// Imputation baselines regrid the training corpus first.
template <RecurrentCell Cell = LstmCell>
RunResult run_experiment(const HoldoutSplit& split, const ModelConfig& base, Baseline baseline,
                         TrainConfig tc, std::uint64_t seed, MmRnn<Cell>* trained = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  const ModelConfig cfg = preset(baseline, base);
  tc.seed = seed;
  RunResult out;
  MmRnn<Cell> model = make_model<Cell>(cfg, split.train, seed);
  if (auto policy = impute_policy(baseline)) {
    const ImputeContext ctx = make_impute_context(split.train, *policy);
    const Dataset grid = impute(split.train, ctx);
    out.trace = train(model, grid, tc);
    out.report = evaluate_holdout(model, grid, split.holdout, &ctx);
  } else {
    out.trace = train(model, split.train, tc);
    out.report = evaluate_holdout(model, split.train, split.holdout);
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (trained) *trained = std::move(model);
  return out;
}

struct SweepCell {
  double t0 = 1.0;
  double kappa = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when training diverged
  double mean_error = 0.0;
  RunResult run;
};

struct SweepSummary {
  double t0 = 1.0;
  double kappa = 0.0;
  std::size_t runs = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // ordered by (t0, kappa, seed) as given
  std::vector<SweepSummary> summaries;

  const SweepSummary& summary(double t0, double kappa) const {
    for (const auto& s : summaries)
      if (s.t0 == t0 && s.kappa == kappa) return s;
    throw Error(ErrorKind::state, "no sweep summary for the requested cell");
  }
};

// Linear-interpolation quantile of a sorted sample.
inline double quantile_sorted(const std::vector<double>& xs, double q) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline void summarize(SweepResult& r) {
  r.summaries.clear();
  std::vector<std::pair<double, double>> keys;
  for (const auto& c : r.cells)
    if (std::find(keys.begin(), keys.end(), std::pair{c.t0, c.kappa}) == keys.end()) keys.emplace_back(c.t0, c.kappa);
  for (const auto& [t0, kappa] : keys) {
    std::vector<double> xs;
    for (const auto& c : r.cells)
      if (c.t0 == t0 && c.kappa == kappa && c.ok) xs.push_back(c.mean_error);
    std::sort(xs.begin(), xs.end());
    SweepSummary s{t0, kappa, xs.size()};
    if (!xs.empty()) {
      s.median = quantile_sorted(xs, 0.5);
      s.q1 = quantile_sorted(xs, 0.25);
      s.q3 = quantile_sorted(xs, 0.75);
      s.min = xs.front();
      s.max = xs.back();
    } else {
      s.median = s.q1 = s.q3 = s.min = s.max = std::numeric_limits<double>::quiet_NaN();
    }
    r.summaries.push_back(s);
  }
}

// Trains and evaluates one model per (t0, kappa, seed). Cells are independent;
// a diverging cell is recorded and the rest continue. `threads` > 1 runs cells
// concurrently; results are assembled in grid order either way.
template <RecurrentCell Cell = LstmCell>
SweepResult kappa_sweep(const HoldoutSplit& split, const ModelConfig& base, const std::vector<double>& t0s,
                        const std::vector<double>& kappas, const std::vector<std::uint64_t>& seeds,
                        const TrainConfig& tc, Baseline baseline = Baseline::mmrnn, unsigned threads = 1) {
  require(!t0s.empty() && !kappas.empty() && !seeds.empty(), ErrorKind::config, "sweep grid is empty");
  SweepResult r;
  for (double t0 : t0s)
    for (double kappa : kappas)
      for (std::uint64_t seed : seeds) {
        SweepCell c;
        c.t0 = t0;
        c.kappa = kappa;
        c.seed = seed;
        r.cells.push_back(std::move(c));
      }

  auto run_cell = [&](SweepCell& c) {
    ModelConfig cfg = base;
    cfg.decay = {c.t0, c.kappa};
    TrainConfig cell_tc = tc;
    cell_tc.on_epoch = nullptr;
    try {
      c.run = run_experiment<Cell>(split, cfg, baseline, cell_tc, c.seed);
      c.mean_error = c.run.report.overall_mean;
      c.ok = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numerical) throw;
      c.ok = false;
      c.error = e.what();
    }
  };

  if (threads <= 1) {
    for (auto& c : r.cells) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i; (i = next.fetch_add(1)) < r.cells.size();) run_cell(r.cells[i]);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& f : failures)
      if (f) std::rethrow_exception(f);
  }
  summarize(r);
  return r;
}

// ---------------------------------------------------------------------------
// Report export

enum class ReportFormat { json, csv };

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& b : r.buckets)
    buckets.push_back({{"delta_t", b.delta_t}, {"count", b.count}, {"mean_error", b.mean_error}, {"std_error", b.std_error}});
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t i = 0; i < r.errors.size(); ++i)
    groups.push_back({{"group_id", r.group_ids[i]}, {"delta_t", r.gaps[i]}, {"error", r.errors[i]}});
  return {{"mode", to_string(r.mode)},
          {"normalization", r.normalization},
          {"count", r.errors.size()},
          {"overall_mean", r.overall_mean},
          {"overall_std", r.overall_std},
          {"buckets", buckets},
          {"groups", groups}};
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.mode = j.at("mode") == "basic" ? Mode::basic : Mode::topic;
  r.normalization = j.at("normalization");
  r.overall_mean = j.at("overall_mean");
  r.overall_std = j.at("overall_std");
  for (const auto& b : j.at("buckets"))
    r.buckets.push_back({b.at("delta_t"), b.at("count"), b.at("mean_error"), b.at("std_error")});
  for (const auto& g : j.at("groups")) {
    r.group_ids.push_back(g.at("group_id"));
    r.gaps.push_back(g.at("delta_t"));
    r.errors.push_back(g.at("error"));
  }
  return r;
}

inline nlohmann::json to_json(const TrainTrace& t) { return t.objective; }

inline nlohmann::json to_json(const SweepResult& s) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : s.cells) {
    nlohmann::json cell = {{"t0", c.t0}, {"kappa", c.kappa}, {"seed", c.seed}, {"ok", c.ok}};
    if (c.ok) {
      cell["mean_error"] = c.mean_error;
      cell["train_trace"] = to_json(c.run.trace);
      cell["buckets"] = to_json(c.run.report)["buckets"];
    } else {
      cell["error"] = c.error;
    }
    cells.push_back(std::move(cell));
  }
  nlohmann::json sums = nlohmann::json::array();
  for (const auto& m : s.summaries)
    sums.push_back({{"t0", m.t0}, {"kappa", m.kappa}, {"runs", m.runs}, {"median", m.median},
                    {"q1", m.q1}, {"q3", m.q3}, {"min", m.min}, {"max", m.max}});
  return {{"cells", cells}, {"summaries", sums}};
}

namespace detail {
inline std::string g17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}
}  // namespace detail

inline constexpr std::string_view kBucketsHeader = "delta_t,count,mean_error,std_error";
inline constexpr std::string_view kSweepHeader = "t0,kappa,seed,mean_error,status";

inline void write_buckets_csv(const EvalReport& r, std::ostream& out) {
  out << kBucketsHeader << '\n';
  for (const auto& b : r.buckets)
    out << b.delta_t << ',' << b.count << ',' << detail::g17(b.mean_error) << ',' << detail::g17(b.std_error) << '\n';
}

inline std::vector<LagBucket> read_buckets_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kBucketsHeader)
    throw Error(ErrorKind::data, "row 1: expected header '" + std::string(kBucketsHeader) + "'");
  std::vector<LagBucket> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 4) detail::row_error(row, "expected 4 fields");
    const auto lag = detail::parse_number<int>(f[0]);
    const auto count = detail::parse_number<std::size_t>(f[1]);
    const auto mean = detail::parse_number<double>(f[2]);
    const auto sd = detail::parse_number<double>(f[3]);
    if (!lag || !count || !mean || !sd) detail::row_error(row, "malformed bucket row");
    out.push_back({*lag, *count, *mean, *sd});
  }
  return out;
}

inline void write_sweep_csv(const SweepResult& s, std::ostream& out) {
  out << kSweepHeader << '\n';
  for (const auto& c : s.cells)
    out << detail::g17(c.t0) << ',' << detail::g17(c.kappa) << ',' << c.seed << ','
        << (c.ok ? detail::g17(c.mean_error) : std::string()) << ',' << (c.ok ? "ok" : "diverged") << '\n';
}

namespace detail {
template <class Fn>
void write_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  fn(out);
  out.flush();
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}
}  // namespace detail

inline void emit_report(const EvalReport& r, const std::string& path, ReportFormat fmt) {
  detail::write_file(path, [&](std::ostream& out) {
    if (fmt == ReportFormat::json)
      out << to_json(r).dump(2) << '\n';
    else
      write_buckets_csv(r, out);
  });
}

inline void emit_report(const SweepResult& s, const std::string& path, ReportFormat fmt) {
  detail::write_file(path, [&](std::ostream& out) {
    if (fmt == ReportFormat::json)
      out << to_json(s).dump(2) << '\n';
    else
      write_sweep_csv(s, out);
  });
}

}  // namespace mmrnn
