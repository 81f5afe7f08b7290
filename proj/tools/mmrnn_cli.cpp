// mmrnn command line: generate, train, evaluate, sweep, impute.

#include "mmrnn/mmrnn.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace mmrnn;
using nlohmann::json;

namespace {

enum Exit { ok = 0, config_error = 1, data_error = 2, diverged = 3 };

struct Common {
  std::string data;
  std::string mode = "basic";
  std::string loss = "l2";
  std::string cell = "lstm";
  std::string baseline = "mmrnn";
  double t0 = 1.0;
  double kappa = 0.1;
  std::size_t hidden = 10;
  std::size_t topics = 25;
  double lr = 0.01;
  std::size_t epochs = 20;
  std::size_t batch_groups = 0;
  std::uint64_t seed = 1;
  double a = 100.0, b = 100.0, c = 1.0;
  double init_scale = 0.1;
  std::string aisles;
  double rare_threshold = 0.0;
  std::string out;
  std::string format;
  bool quiet = false;
};

void add_model_flags(CLI::App* app, Common& o) {
  app->add_option("--mode", o.mode, "basic or topic")->check(CLI::IsMember({"basic", "topic"}));
  app->add_option("--loss", o.loss, "l2 or cross_entropy (basic mode)")->check(CLI::IsMember({"l2", "cross_entropy"}));
  app->add_option("--cell", o.cell, "lstm or rnn")->check(CLI::IsMember({"lstm", "rnn"}));
  app->add_option("--t0", o.t0, "decay offset (>= 1)");
  app->add_option("--kappa", o.kappa, "decay exponent (>= 0)");
  app->add_option("--hidden-dim", o.hidden, "hidden size");
  app->add_option("--topics", o.topics, "topic count (topic mode)");
  app->add_option("--lr", o.lr, "learning rate");
  app->add_option("--epochs", o.epochs, "training epochs");
  app->add_option("--batch-groups", o.batch_groups, "groups per theta step (0 = one full-batch step per epoch)");
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--prior-a", o.a, "prior variance of theta");
  app->add_option("--prior-b", o.b, "prior variance of the group biases");
  app->add_option("--noise-c", o.c, "observation noise variance");
  app->add_option("--init-scale", o.init_scale, "uniform init range of theta");
  app->add_option("--baseline", o.baseline, "mmrnn, lstm, exchangeable, impute-mean, impute-forward, impute-zero");
}

void add_data_flags(CLI::App* app, Common& o) {
  app->add_option("--data", o.data, "orders CSV")->required();
  app->add_option("--aisles", o.aisles, "item_id,aisle_id CSV for rare-item aggregation");
  app->add_option("--rare-threshold", o.rare_threshold, "merge items with fewer total counts into their aisle");
}

Dataset load(const Common& o) {
  Dataset ds = load_orders_csv(o.data);
  if (o.rare_threshold > 0.0) {
    require(!o.aisles.empty(), ErrorKind::config, "--rare-threshold needs --aisles");
    ds = aggregate_rare_items(ds, o.rare_threshold, load_item_aisles(o.aisles));
  }
  return ds;
}

ModelConfig model_config(const Common& o, const Dataset& ds) {
  ModelConfig cfg;
  cfg.mode = o.mode == "topic" ? Mode::topic : Mode::basic;
  cfg.loss = o.loss == "cross_entropy" ? LossKind::cross_entropy : LossKind::l2;
  cfg.hidden = o.hidden;
  cfg.V = ds.item_count();
  cfg.K = cfg.mode == Mode::topic ? o.topics : cfg.V;
  cfg.decay = {o.t0, o.kappa};
  cfg.a = o.a;
  cfg.b = o.b;
  cfg.c = o.c;
  cfg.init_scale = o.init_scale;
  cfg.validate();
  return cfg;
}

TrainConfig train_config(const Common& o) {
  TrainConfig tc;
  tc.lr = o.lr;
  tc.epochs = o.epochs;
  tc.seed = o.seed;
  tc.batch_groups = o.batch_groups;
  tc.validate();
  return tc;
}

ReportFormat format_for(const Common& o) {
  std::string f = o.format;
  if (f.empty()) f = o.out.size() >= 4 && o.out.substr(o.out.size() - 4) == ".csv" ? "csv" : "json";
  require(f == "json" || f == "csv", ErrorKind::config, "unknown format '" + f + "'");
  return f == "csv" ? ReportFormat::csv : ReportFormat::json;
}

void write_json(const json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::data, path + ": " + e.what());
  }
}

json eval_summary(const EvalReport& r) {
  json j = to_json(r);
  return {{"overall_mean", j["overall_mean"]},
          {"overall_std", j["overall_std"]},
          {"count", j["count"]},
          {"normalization", j["normalization"]},
          {"buckets", j["buckets"]}};
}

template <RecurrentCell Cell>
int do_train(const Common& o, const std::string& save_model) {
  const auto start = std::chrono::steady_clock::now();
  const Dataset ds = load(o);
  const HoldoutSplit split = split_holdout_last(ds);
  require(!split.train.groups.empty(), ErrorKind::data, "no group has more than one order");
  const Baseline baseline = baseline_from_string(o.baseline);
  const ModelConfig cfg = preset(baseline, model_config(o, ds));
  TrainConfig tc = train_config(o);
  if (!o.quiet)
    tc.on_epoch = [&](std::size_t epoch, double obj) {
      std::cerr << "epoch " << epoch << "/" << tc.epochs << "  objective " << std::setprecision(10) << obj << '\n';
    };
  std::cerr << "groups " << split.train.groups.size() << " (excluded " << split.excluded.size() << "), items "
            << ds.item_count() << ", orders " << ds.order_count() << '\n';

  MmRnn<Cell> model = make_model<Cell>(cfg, split.train, o.seed);
  const RunResult r = run_experiment<Cell>(split, cfg, baseline, tc, o.seed, &model);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json conf = to_json(cfg);
  conf["cell"] = std::string(Cell::name);
  conf["baseline"] = o.baseline;
  conf["lr"] = tc.lr;
  conf["epochs"] = tc.epochs;
  conf["batch_groups"] = tc.batch_groups;
  conf["data"] = o.data;
  conf["rare_threshold"] = o.rare_threshold;
  json run = {{"config", conf},
              {"train_trace", to_json(r.trace)},
              {"eval", eval_summary(r.report)},
              {"excluded_groups", split.excluded.size()},
              {"seed", o.seed},
              {"wall_time_seconds", wall}};
  write_json(run, o.out);
  if (!save_model.empty()) {
    json m = model_to_json(model);
    m["baseline"] = o.baseline;
    m["rare_threshold"] = o.rare_threshold;
    write_json(m, save_model);
  }
  std::cerr << "held-out mean error " << std::setprecision(6) << r.report.overall_mean << " over "
            << r.report.errors.size() << " groups\n";
  return ok;
}

template <RecurrentCell Cell>
int do_evaluate(Common o, const json& mj) {
  const MmRnn<Cell> model = model_from_json<Cell>(mj);
  if (mj.contains("rare_threshold") && o.rare_threshold == 0.0) o.rare_threshold = mj["rare_threshold"];
  const Dataset ds = load(o);
  const HoldoutSplit split = split_holdout_last(ds);
  const Baseline baseline = baseline_from_string(mj.value("baseline", std::string("mmrnn")));
  EvalReport r;
  if (auto policy = impute_policy(baseline)) {
    const ImputeContext ctx = make_impute_context(split.train, *policy);
    r = evaluate_holdout(model, impute(split.train, ctx), split.holdout, &ctx);
  } else {
    r = evaluate_holdout(model, split.train, split.holdout);
  }
  if (o.out.empty())
    std::cout << to_json(r).dump(2) << '\n';
  else
    emit_report(r, o.out, format_for(o));
  return ok;
}

template <RecurrentCell Cell>
int do_sweep(const Common& o, const std::vector<double>& t0s, const std::vector<double>& kappas,
             std::size_t seeds, unsigned threads) {
  const Dataset ds = load(o);
  const HoldoutSplit split = split_holdout_last(ds);
  const ModelConfig base = model_config(o, ds);
  const TrainConfig tc = train_config(o);
  std::vector<std::uint64_t> seed_list;
  for (std::size_t s = 0; s < seeds; ++s) seed_list.push_back(o.seed + s);
  const SweepResult r =
      kappa_sweep<Cell>(split, base, t0s, kappas, seed_list, tc, baseline_from_string(o.baseline), threads);
  for (const auto& s : r.summaries)
    std::cerr << "t0 " << s.t0 << " kappa " << s.kappa << "  median " << s.median << "  [" << s.q1 << ", "
              << s.q3 << "]  runs " << s.runs << '\n';
  if (o.out.empty())
    std::cout << to_json(r).dump(2) << '\n';
  else
    emit_report(r, o.out, format_for(o));
  return ok;
}

std::string sidecar_path(const std::string& out) {
  const auto dot = out.rfind('.');
  const auto slash = out.rfind('/');
  const std::string stem = dot != std::string::npos && (slash == std::string::npos || dot > slash) ? out.substr(0, dot) : out;
  return stem + ".truth.json";
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return config_error;
    case ErrorKind::numerical: return diverged;
    default: return data_error;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed membership recurrent model: training and evaluation on grouped order sequences"};
  app.require_subcommand(1);
  Common o;

  auto* gen = app.add_subcommand("generate", "sample a synthetic corpus and its ground truth");
  SyntheticSpec spec;
  gen->add_option("--out", o.out, "orders CSV to write; ground truth goes next to it as <stem>.truth.json")->required();
  gen->add_option("--seed", spec.seed);
  gen->add_option("--groups", spec.groups);
  gen->add_option("--topics", spec.topics);
  gen->add_option("--items", spec.items);
  gen->add_option("--min-orders", spec.min_orders);
  gen->add_option("--max-orders", spec.max_orders);
  gen->add_option("--min-order-size", spec.min_order_size);
  gen->add_option("--max-order-size", spec.max_order_size);
  gen->add_option("--short-gap-weight", spec.gaps.short_weight);
  gen->add_option("--alpha", spec.dirichlet_alpha, "Dirichlet concentration of the topics");
  gen->add_option("--phi-variance", spec.phi_variance);
  gen->add_option("--t0", spec.decay.t0, "generator decay offset");
  gen->add_option("--kappa", spec.decay.kappa, "generator decay exponent");
  gen->add_option("--hidden-dim", spec.hidden);

  auto* tr = app.add_subcommand("train", "train on all but each group's last order and evaluate on the rest");
  std::string save_model;
  add_data_flags(tr, o);
  add_model_flags(tr, o);
  tr->add_option("--out", o.out, "run JSON (stdout when absent)");
  tr->add_option("--save-model", save_model, "write the trained model as JSON");
  tr->add_flag("--quiet", o.quiet, "no per-epoch progress");

  auto* ev = app.add_subcommand("evaluate", "evaluate a saved model on the last-order holdout");
  std::string model_path;
  add_data_flags(ev, o);
  ev->add_option("--model", model_path, "model JSON from train --save-model")->required();
  ev->add_option("--out", o.out, "report path (.json or .csv)");
  ev->add_option("--format", o.format, "json or csv");

  auto* sw = app.add_subcommand("sweep", "train and evaluate over a t0 x kappa grid with several seeds");
  std::vector<double> t0s{1.0}, kappas{0.0, 0.05, 0.1, 0.3, 1.0, 3.0};
  std::size_t seeds = 5;
  unsigned threads = 1;
  add_data_flags(sw, o);
  add_model_flags(sw, o);
  sw->add_option("--t0s", t0s, "t0 grid")->delimiter(',');
  sw->add_option("--kappas", kappas, "kappa grid")->delimiter(',');
  sw->add_option("--seeds", seeds, "seeds per cell, counting up from --seed");
  sw->add_option("--threads", threads, "cells trained concurrently");
  sw->add_option("--out", o.out, "sweep path (.json or .csv)");
  sw->add_option("--format", o.format, "json or csv");

  auto* im = app.add_subcommand("impute", "write the daily-regridded corpus of an imputation policy");
  std::string policy = "zero";
  add_data_flags(im, o);
  im->add_option("--policy", policy, "mean, forward or zero")->check(CLI::IsMember({"mean", "forward", "zero"}));
  im->add_option("--out", o.out, "regridded CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*gen) {
      const SyntheticCorpus c = generate_synthetic(spec);
      write_orders_csv(c.data, o.out);
      write_json(truth_to_json(c.truth), sidecar_path(o.out));
      std::cerr << "wrote " << c.data.order_count() << " orders for " << c.data.groups.size() << " groups to "
                << o.out << '\n';
      return ok;
    }
    if (*tr) return o.cell == "rnn" ? do_train<TanhRnnCell>(o, save_model) : do_train<LstmCell>(o, save_model);
    if (*ev) {
      const json mj = read_json(model_path);
      return mj.value("cell", std::string("lstm")) == "rnn" ? do_evaluate<TanhRnnCell>(o, mj)
                                                             : do_evaluate<LstmCell>(o, mj);
    }
    if (*sw)
      return o.cell == "rnn" ? do_sweep<TanhRnnCell>(o, t0s, kappas, seeds, threads)
                             : do_sweep<LstmCell>(o, t0s, kappas, seeds, threads);
    if (*im) {
      const Dataset ds = load(o);
      const ImputeKind kind = policy == "mean" ? ImputeKind::mean : policy == "forward" ? ImputeKind::forward : ImputeKind::zero;
      const Dataset grid = impute(ds, ImputePolicy{kind});
      std::ofstream out(o.out);
      if (!out) throw Error(ErrorKind::io, "cannot write " + o.out);
      write_regridded_csv(grid, out);
      return ok;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return data_error;
  }
  return ok;
}
