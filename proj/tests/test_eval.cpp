#include "mmrnn/mmrnn.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace mmrnn;
using namespace mmrnn::testing;

namespace {

HoldoutSplit small_split(std::uint64_t seed, std::size_t items, std::size_t groups = 8) {
  Rng rng(seed);
  return split_holdout_last(random_dataset(rng, groups, 2, 7, items));
}

std::string temp_path(const std::string& name) { return ::testing::TempDir() + name; }

}  // namespace

TEST(HoldoutError, PerfectPredictionIsZero) {
  Order o{3.0, (Vec(3) << 1, 2, 1).finished()};
  StepPrediction p;
  p.sigma = p.yhat = o.counts / 4.0;
  EXPECT_EQ(holdout_error(Mode::basic, o, p), 0.0);
  p.yhat = o.counts;
  EXPECT_EQ(holdout_error(Mode::topic, o, p), 0.0);
}

TEST(HoldoutError, UniformAgainstOneHot) {
  Order o{3.0, (Vec(4) << 0, 5, 0, 0).finished()};
  StepPrediction p;
  p.sigma = p.yhat = Vec::Constant(4, 0.25);
  EXPECT_DOUBLE_EQ(holdout_error(Mode::basic, o, p), 0.75);
}

TEST(HoldoutError, TopicModeDividesByItems) {
  Order o{3.0, (Vec(4) << 0, 2, 0, 0).finished()};
  StepPrediction p;
  p.yhat = (Vec(4) << 1, 1, 0, 0).finished();
  EXPECT_DOUBLE_EQ(holdout_error(Mode::topic, o, p), 2.0 / 4.0);
}

TEST(Evaluate, AggregatesMatchBruteForce) {
  for (Mode mode : {Mode::basic, Mode::topic}) {
    const HoldoutSplit split = small_split(1, mode == Mode::basic ? 4 : 7, 12);
    const ModelConfig cfg = small_config(mode, LossKind::l2, 3, 4, mode == Mode::basic ? 4 : 7);
    const MmRnn<> m = random_model(cfg, split.train, 2);
    const EvalReport r = evaluate_holdout(m, split.train, split.holdout);
    ASSERT_EQ(r.errors.size(), split.holdout.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < split.holdout.size(); ++i) {
      GroupSequence ext = split.train.groups[split.holdout[i].train_group];
      ext.orders.push_back(split.holdout[i].order);
      const StepPrediction p = m.forward(ext).back();
      const Vec& y = split.holdout[i].order.counts;
      const double e = mode == Mode::basic ? (y / y.sum() - p.sigma).squaredNorm() : (y - p.yhat).squaredNorm() / y.size();
      EXPECT_NEAR(r.errors[i], e, 1e-15);
      EXPECT_GE(r.errors[i], 0.0);
      sum += e;
    }
    EXPECT_NEAR(r.overall_mean, sum / static_cast<double>(r.errors.size()), 1e-14);
    EXPECT_EQ(r.normalization, mode == Mode::basic ? "none" : "per-item");

    std::size_t count = 0;
    double weighted = 0.0;
    for (const auto& b : r.buckets) {
      EXPECT_GT(b.count, 0u);
      count += b.count;
      weighted += b.mean_error * static_cast<double>(b.count);
    }
    EXPECT_EQ(count, r.errors.size());
    EXPECT_NEAR(weighted / static_cast<double>(count), r.overall_mean, 1e-14);
  }
}

TEST(Evaluate, DoesNotMutateModel) {
  const HoldoutSplit split = small_split(2, 5);
  const ModelConfig cfg = small_config(Mode::topic, LossKind::l2, 3, 3, 5);
  const MmRnn<> m = random_model(cfg, split.train, 1);
  const std::string before = model_to_json(m).dump();
  evaluate_holdout(m, split.train, split.holdout);
  EXPECT_EQ(model_to_json(m).dump(), before);
}

TEST(Evaluate, StdIsPopulation) {
  EvalReport r;
  r.errors = {1.0, 3.0};
  r.gaps = {2.0, 2.0};
  r.group_ids = {1, 2};
  summarize(r);
  EXPECT_DOUBLE_EQ(r.overall_mean, 2.0);
  EXPECT_DOUBLE_EQ(r.overall_std, 1.0);
  ASSERT_EQ(r.buckets.size(), 1u);
  EXPECT_EQ(r.buckets[0].delta_t, 2);
}

TEST(Evaluate, ImputedHoldoutFillsGap) {
  const HoldoutSplit split = small_split(3, 4);
  ModelConfig cfg = preset(Baseline::impute_zero, small_config(Mode::basic, LossKind::l2, 3, 4, 4));
  const ImputeContext ctx = make_impute_context(split.train, ImputePolicy{ImputeKind::zero});
  const Dataset grid = impute(split.train, ctx);
  const MmRnn<> m = random_model(cfg, grid, 1);
  const EvalReport r = evaluate_holdout(m, grid, split.holdout, &ctx);
  for (std::size_t i = 0; i < split.holdout.size(); ++i) {
    GroupSequence ext = grid.groups[split.holdout[i].train_group];
    for (int k = 1; k < static_cast<int>(split.holdout[i].order.delta_t); ++k) ext.orders.push_back({1.0, Vec::Zero(4)});
    ext.orders.push_back({1.0, split.holdout[i].order.counts});
    EXPECT_EQ(r.errors[i], holdout_error(Mode::basic, split.holdout[i].order, m.forward(ext).back()));
    EXPECT_EQ(r.gaps[i], split.holdout[i].order.delta_t);
  }
}

TEST(Sweep, SingleCellEqualsStandaloneRun) {
  const HoldoutSplit split = small_split(4, 4);
  const ModelConfig base = small_config(Mode::basic, LossKind::l2, 3, 4, 4);
  TrainConfig tc;
  tc.epochs = 3;
  const SweepResult s = kappa_sweep(split, base, {1.0}, {0.3}, {7}, tc);
  ASSERT_EQ(s.cells.size(), 1u);
  ModelConfig cfg = base;
  cfg.decay = {1.0, 0.3};
  const RunResult r = run_experiment(split, cfg, Baseline::mmrnn, tc, 7);
  EXPECT_EQ(s.cells[0].mean_error, r.report.overall_mean);
  EXPECT_EQ(s.cells[0].run.trace.objective, r.trace.objective);
  EXPECT_EQ(s.summaries[0].median, r.report.overall_mean);
}

TEST(Sweep, KappaZeroEqualsLstmPreset) {
  const HoldoutSplit split = small_split(5, 6);
  const ModelConfig base = small_config(Mode::topic, LossKind::l2, 3, 3, 6);
  TrainConfig tc;
  tc.epochs = 3;
  const SweepResult s = kappa_sweep(split, base, {1.0}, {0.0, 0.5}, {1, 2}, tc);
  for (std::uint64_t seed : {1, 2}) {
    const RunResult r = run_experiment(split, base, Baseline::lstm, tc, seed);
    const SweepCell& c = s.cells[seed - 1];
    EXPECT_EQ(c.kappa, 0.0);
    EXPECT_EQ(c.run.report.errors, r.report.errors);
    EXPECT_EQ(c.run.trace.objective, r.trace.objective);
  }
}

TEST(Sweep, DeterministicAndThreadIndependent) {
  const HoldoutSplit split = small_split(6, 4);
  const ModelConfig base = small_config(Mode::basic, LossKind::l2, 3, 4, 4);
  TrainConfig tc;
  tc.epochs = 2;
  const SweepResult a = kappa_sweep(split, base, {1.0, 10.0}, {0.0, 1.0}, {1, 2, 3}, tc);
  const SweepResult b = kappa_sweep(split, base, {1.0, 10.0}, {0.0, 1.0}, {1, 2, 3}, tc, Baseline::mmrnn, 3);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.summaries.size(), 4u);
  EXPECT_EQ(a.summary(10.0, 1.0).runs, 3u);
  EXPECT_THROW(a.summary(2.0, 1.0), Error);
  EXPECT_THROW(kappa_sweep(split, base, {}, {1.0}, {1}, tc), Error);
}

TEST(Sweep, DivergedCellIsRecorded) {
  const HoldoutSplit split = small_split(7, 4);
  const ModelConfig base = small_config(Mode::basic, LossKind::l2, 3, 4, 4);
  TrainConfig tc;
  tc.epochs = 2;
  tc.lr = 1e308;
  const SweepResult s = kappa_sweep(split, base, {1.0}, {0.5}, {1, 2}, tc);
  for (const auto& c : s.cells) {
    EXPECT_FALSE(c.ok);
    EXPECT_FALSE(c.error.empty());
  }
  EXPECT_EQ(s.summaries[0].runs, 0u);
  std::ostringstream out;
  write_sweep_csv(s, out);
  EXPECT_NE(out.str().find("diverged"), std::string::npos);
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> xs{1, 2, 3, 4, 5};
  EXPECT_EQ(quantile_sorted(xs, 0.5), 3.0);
  EXPECT_EQ(quantile_sorted(xs, 0.25), 2.0);
  EXPECT_EQ(quantile_sorted({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_EQ(quantile_sorted({7}, 0.75), 7.0);
}

TEST(Report, EmptyBucketsGiveHeaderOnlyCsv) {
  EvalReport r;
  std::ostringstream out;
  write_buckets_csv(r, out);
  EXPECT_EQ(out.str(), "delta_t,count,mean_error,std_error\n");
}

TEST(Report, CsvAndJsonRoundTrip) {
  const HoldoutSplit split = small_split(8, 7, 20);
  const ModelConfig cfg = small_config(Mode::topic, LossKind::l2, 3, 3, 7);
  const MmRnn<> m = random_model(cfg, split.train, 1);
  const EvalReport r = evaluate_holdout(m, split.train, split.holdout);

  const std::string csv_path = temp_path("buckets.csv"), json_path = temp_path("report.json");
  emit_report(r, csv_path, ReportFormat::csv);
  emit_report(r, json_path, ReportFormat::json);
  std::ifstream csv_in(csv_path), json_in(json_path);
  const auto buckets = read_buckets_csv(csv_in);
  const EvalReport back = eval_report_from_json(nlohmann::json::parse(json_in));

  ASSERT_EQ(buckets.size(), r.buckets.size());
  ASSERT_EQ(back.buckets.size(), r.buckets.size());
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    EXPECT_EQ(buckets[i].delta_t, r.buckets[i].delta_t);
    EXPECT_EQ(buckets[i].count, r.buckets[i].count);
    EXPECT_EQ(buckets[i].mean_error, r.buckets[i].mean_error);
    EXPECT_EQ(buckets[i].std_error, r.buckets[i].std_error);
    EXPECT_EQ(back.buckets[i].mean_error, buckets[i].mean_error);
    EXPECT_EQ(back.buckets[i].std_error, buckets[i].std_error);
    EXPECT_EQ(back.buckets[i].count, buckets[i].count);
  }
  EXPECT_EQ(back.errors, r.errors);
  EXPECT_EQ(back.overall_mean, r.overall_mean);
  EXPECT_EQ(back.overall_std, r.overall_std);
  std::remove(csv_path.c_str());
  std::remove(json_path.c_str());
}

TEST(Report, UnwritablePathIsIoError) {
  EvalReport r;
  try {
    emit_report(r, "/nonexistent-dir/x.csv", ReportFormat::csv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x.csv"), std::string::npos);
  }
}
