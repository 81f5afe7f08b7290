#pragma once

#include "mmrnn/cells.hpp"
#include "mmrnn/decay.hpp"
#include "mmrnn/numerics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace mmrnn {

using ItemId = std::int64_t;
using GroupId = std::int64_t;

inline constexpr double kMaxGapDays = 30.0;

// One order at the raw level, items kept sparse.
struct OrderRecord {
  GroupId group_id = 0;
  std::size_t order_index = 1;  // 1-based within the group
  std::optional<int> days_since_prior;
  std::map<ItemId, long long> items;
};

// Dense order: gap to the previous order in days (ignored for the first
// order) and the count vector over the vocabulary.
struct Order {
  double delta_t = 0.0;
  Vec counts;

  double total() const { return counts.sum(); }
};

struct GroupSequence {
  GroupId group_id = 0;
  std::vector<Order> orders;

  std::size_t size() const { return orders.size(); }
};

struct Vocabulary {
  std::vector<ItemId> item_ids;                 // dense index -> item id
  std::vector<std::optional<ItemId>> aisles;    // dense index -> aisle id
  std::unordered_map<ItemId, std::size_t> index;

  std::size_t size() const { return item_ids.size(); }

  std::size_t add(ItemId id, std::optional<ItemId> aisle = std::nullopt) {
    auto [it, inserted] = index.emplace(id, item_ids.size());
    if (inserted) {
      item_ids.push_back(id);
      aisles.push_back(aisle);
    }
    return it->second;
  }
};

struct Dataset {
  Vocabulary vocab;
  std::vector<GroupSequence> groups;
  // Imputed corpora contain inserted steps that may be all zero.
  bool regridded = false;

  std::size_t item_count() const { return vocab.size(); }
  std::size_t order_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    return n;
  }
  double mean_order_size() const {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& g : groups)
      for (const auto& o : g.orders) {
        total += o.total();
        ++n;
      }
    return n ? total / static_cast<double>(n) : 0.0;
  }
};

// Dense vector scaled to sum to one; the zero vector stays zero.
inline Vec normalized(const Vec& counts) {
  const double s = counts.sum();
  if (s <= 0.0) return Vec::Zero(counts.size());
  return counts / s;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

template <class T>
std::optional<T> parse_number(const std::string& s) {
  T v{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::ostringstream os;
    os << static_cast<long long>(v);
    return os.str();
  }
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

[[noreturn]] inline void row_error(std::size_t row, const std::string& what) {
  throw Error(ErrorKind::data, "row " + std::to_string(row) + ": " + what);
}

}  // namespace detail

inline constexpr std::string_view kOrdersHeader = "group_id,order_index,days_since_prior,item_id,count";

// Builds dense sequences from validated records. Vocabulary is indexed by
// ascending item id so identical inputs give identical layouts.
inline Dataset dataset_from_records(const std::vector<OrderRecord>& records) {
  Dataset ds;
  std::vector<ItemId> ids;
  for (const auto& r : records)
    for (const auto& [item, _] : r.items) ids.push_back(item);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (ItemId id : ids) ds.vocab.add(id);

  const auto V = static_cast<Eigen::Index>(ds.vocab.size());
  std::map<GroupId, std::vector<const OrderRecord*>> by_group;
  for (const auto& r : records) by_group[r.group_id].push_back(&r);
  for (auto& [gid, recs] : by_group) {
    std::sort(recs.begin(), recs.end(),
              [](const OrderRecord* a, const OrderRecord* b) { return a->order_index < b->order_index; });
    GroupSequence seq;
    seq.group_id = gid;
    for (const OrderRecord* r : recs) {
      Order o;
      o.delta_t = r->days_since_prior.value_or(0);
      o.counts = Vec::Zero(V);
      for (const auto& [item, count] : r->items)
        o.counts[static_cast<Eigen::Index>(ds.vocab.index.at(item))] += static_cast<double>(count);
      seq.orders.push_back(std::move(o));
    }
    ds.groups.push_back(std::move(seq));
  }
  return ds;
}

// Parses the long orders format. Either the whole file is valid or an error
// naming the offending row is thrown.
inline Dataset load_orders_csv(std::istream& in, double max_gap = kMaxGapDays) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::data, "empty orders file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kOrdersHeader)
    throw Error(ErrorKind::data, "row 1: expected header '" + std::string(kOrdersHeader) + "'");

  struct Key {
    GroupId g;
    std::size_t idx;
    bool operator<(const Key& o) const { return g != o.g ? g < o.g : idx < o.idx; }
  };
  std::map<Key, OrderRecord> orders;
  std::map<Key, std::size_t> first_row;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 5) detail::row_error(row, "expected 5 fields, found " + std::to_string(f.size()));
    const auto gid = detail::parse_number<GroupId>(f[0]);
    const auto idx = detail::parse_number<long long>(f[1]);
    const auto item = detail::parse_number<ItemId>(f[3]);
    const auto count = detail::parse_number<long long>(f[4]);
    if (!gid) detail::row_error(row, "bad group_id '" + f[0] + "'");
    if (!idx || *idx < 1) detail::row_error(row, "bad order_index '" + f[1] + "'");
    if (!item) detail::row_error(row, "bad item_id '" + f[3] + "'");
    if (!count || *count < 1) detail::row_error(row, "bad count '" + f[4] + "'");
    std::optional<int> days;
    if (!f[2].empty()) {
      const auto d = detail::parse_number<int>(f[2]);
      if (!d) detail::row_error(row, "bad days_since_prior '" + f[2] + "'");
      if (*d < 0 || *d > max_gap)
        detail::row_error(row, "days_since_prior " + f[2] + " outside [0, " +
                                   detail::format_double(max_gap) + "]");
      days = *d;
    }
    if ((*idx == 1) == days.has_value())
      detail::row_error(row, *idx == 1 ? "first order must have empty days_since_prior"
                                       : "days_since_prior missing on a non-first order");

    const Key key{*gid, static_cast<std::size_t>(*idx)};
    auto [it, inserted] = orders.try_emplace(key);
    OrderRecord& rec = it->second;
    if (inserted) {
      rec.group_id = *gid;
      rec.order_index = key.idx;
      rec.days_since_prior = days;
      first_row[key] = row;
    } else if (rec.days_since_prior != days) {
      detail::row_error(row, "days_since_prior disagrees with earlier rows of this order");
    }
    if (!rec.items.emplace(*item, *count).second)
      detail::row_error(row, "duplicate item " + f[3] + " within one order");
  }

  std::vector<OrderRecord> records;
  GroupId current = 0;
  std::size_t expected = 1;
  bool have_group = false;
  for (auto& [key, rec] : orders) {
    if (!have_group || key.g != current) {
      current = key.g;
      expected = 1;
      have_group = true;
    }
    if (key.idx != expected)
      detail::row_error(first_row[key], "order_index " + std::to_string(key.idx) + " of group " +
                                            std::to_string(key.g) + " is not consecutive (expected " +
                                            std::to_string(expected) + ")");
    ++expected;
    records.push_back(std::move(rec));
  }
  return dataset_from_records(records);
}

inline Dataset load_orders_csv(const std::string& path, double max_gap = kMaxGapDays) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  return load_orders_csv(in, max_gap);
}

// Canonical order: groups by id, orders by index, items by id.
inline void write_orders_csv(const Dataset& ds, std::ostream& out) {
  require(!ds.regridded, ErrorKind::data,
          "regridded corpora are written with write_regridded_csv");
  out << kOrdersHeader << '\n';
  std::vector<std::size_t> item_order(ds.vocab.size());
  for (std::size_t i = 0; i < item_order.size(); ++i) item_order[i] = i;
  std::sort(item_order.begin(), item_order.end(),
            [&](std::size_t a, std::size_t b) { return ds.vocab.item_ids[a] < ds.vocab.item_ids[b]; });
  std::vector<const GroupSequence*> groups;
  for (const auto& g : ds.groups) groups.push_back(&g);
  std::sort(groups.begin(), groups.end(),
            [](const GroupSequence* a, const GroupSequence* b) { return a->group_id < b->group_id; });
  for (const GroupSequence* g : groups) {
    for (std::size_t t = 0; t < g->orders.size(); ++t) {
      const Order& o = g->orders[t];
      const std::string days = t == 0 ? "" : detail::format_double(o.delta_t);
      for (std::size_t i : item_order) {
        const double c = o.counts[static_cast<Eigen::Index>(i)];
        if (c == 0.0) continue;
        require(c == std::floor(c) && c > 0, ErrorKind::data, "non-integral count in orders file");
        out << g->group_id << ',' << (t + 1) << ',' << days << ',' << ds.vocab.item_ids[i] << ','
            << static_cast<long long>(c) << '\n';
      }
    }
  }
}

inline void write_orders_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  write_orders_csv(ds, out);
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

// Regridded corpora carry real-valued and possibly empty steps. Each step is
// written as its non-zero items; an all-zero step is a single row with empty
// item_id and count.
inline void write_regridded_csv(const Dataset& ds, std::ostream& out) {
  out << "group_id,step,delta_t,item_id,count\n";
  for (const auto& g : ds.groups) {
    for (std::size_t t = 0; t < g.orders.size(); ++t) {
      const Order& o = g.orders[t];
      const std::string days = t == 0 ? "" : detail::format_double(o.delta_t);
      bool any = false;
      for (Eigen::Index i = 0; i < o.counts.size(); ++i) {
        if (o.counts[i] == 0.0) continue;
        any = true;
        out << g.group_id << ',' << (t + 1) << ',' << days << ','
            << ds.vocab.item_ids[static_cast<std::size_t>(i)] << ','
            << detail::format_double(o.counts[i]) << '\n';
      }
      if (!any) out << g.group_id << ',' << (t + 1) << ',' << days << ",,\n";
    }
  }
}

// item_id,aisle_id
inline std::unordered_map<ItemId, ItemId> load_item_aisles(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::data, "empty aisle map");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "item_id,aisle_id") throw Error(ErrorKind::data, "row 1: expected header 'item_id,aisle_id'");
  std::unordered_map<ItemId, ItemId> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 2) detail::row_error(row, "expected 2 fields");
    const auto item = detail::parse_number<ItemId>(f[0]);
    const auto aisle = detail::parse_number<ItemId>(f[1]);
    if (!item || !aisle) detail::row_error(row, "bad item/aisle id");
    if (!out.emplace(*item, *aisle).second) detail::row_error(row, "duplicate item " + f[0]);
  }
  return out;
}

inline std::unordered_map<ItemId, ItemId> load_item_aisles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  return load_item_aisles(in);
}

// Id given to the merged item standing in for all rare items of an aisle.
inline ItemId aisle_item_id(ItemId aisle) { return -1 - aisle; }

// Items whose corpus-wide count is below `threshold` are merged into one
// synthetic item per aisle. Per-order totals are preserved exactly.
inline Dataset aggregate_rare_items(const Dataset& ds, double threshold,
                                    const std::unordered_map<ItemId, ItemId>& item_to_aisle) {
  if (threshold <= 0.0) return ds;
  const auto V = static_cast<Eigen::Index>(ds.vocab.size());
  Vec totals = Vec::Zero(V);
  for (const auto& g : ds.groups)
    for (const auto& o : g.orders) totals += o.counts;

  auto aisle_of = [&](std::size_t i) -> ItemId {
    const ItemId id = ds.vocab.item_ids[i];
    if (auto it = item_to_aisle.find(id); it != item_to_aisle.end()) return it->second;
    if (ds.vocab.aisles[i]) return *ds.vocab.aisles[i];
    throw Error(ErrorKind::data, "rare item " + std::to_string(id) + " has no aisle mapping");
  };

  // Kept items first (ascending id), then one merged item per aisle.
  std::vector<std::pair<ItemId, std::size_t>> kept;
  std::map<ItemId, std::vector<std::size_t>> rare_by_aisle;
  for (std::size_t i = 0; i < ds.vocab.size(); ++i) {
    if (totals[static_cast<Eigen::Index>(i)] < threshold)
      rare_by_aisle[aisle_of(i)].push_back(i);
    else
      kept.emplace_back(ds.vocab.item_ids[i], i);
  }
  std::sort(kept.begin(), kept.end());

  Dataset out;
  out.regridded = ds.regridded;
  std::vector<std::size_t> remap(ds.vocab.size());
  for (const auto& [id, old] : kept) {
    std::optional<ItemId> aisle = ds.vocab.aisles[old];
    if (auto it = item_to_aisle.find(id); it != item_to_aisle.end()) aisle = it->second;
    remap[old] = out.vocab.add(id, aisle);
  }
  for (const auto& [aisle, members] : rare_by_aisle) {
    const std::size_t idx = out.vocab.add(aisle_item_id(aisle), aisle);
    for (std::size_t old : members) remap[old] = idx;
  }

  const auto V2 = static_cast<Eigen::Index>(out.vocab.size());
  for (const auto& g : ds.groups) {
    GroupSequence seq;
    seq.group_id = g.group_id;
    for (const auto& o : g.orders) {
      Order n;
      n.delta_t = o.delta_t;
      n.counts = Vec::Zero(V2);
      for (Eigen::Index i = 0; i < V; ++i)
        if (o.counts[i] != 0.0) n.counts[static_cast<Eigen::Index>(remap[static_cast<std::size_t>(i)])] += o.counts[i];
      seq.orders.push_back(std::move(n));
    }
    out.groups.push_back(std::move(seq));
  }
  return out;
}

struct HoldoutOrder {
  GroupId group_id = 0;
  std::size_t train_group = 0;  // index into the training dataset's groups
  Order order;                  // order.delta_t is the held-out gap
};

struct HoldoutSplit {
  Dataset train;
  std::vector<HoldoutOrder> holdout;
  std::vector<GroupId> excluded;  // single-order groups
  std::size_t excluded_orders = 0;
};

// Holds out each group's final order. Single-order groups have nothing left
// to train on and are excluded.
inline HoldoutSplit split_holdout_last(const Dataset& ds) {
  HoldoutSplit split;
  split.train.vocab = ds.vocab;
  split.train.regridded = ds.regridded;
  for (const auto& g : ds.groups) {
    if (g.orders.size() <= 1) {
      split.excluded.push_back(g.group_id);
      split.excluded_orders += g.orders.size();
      continue;
    }
    GroupSequence seq;
    seq.group_id = g.group_id;
    seq.orders.assign(g.orders.begin(), g.orders.end() - 1);
    split.holdout.push_back({g.group_id, split.train.groups.size(), g.orders.back()});
    split.train.groups.push_back(std::move(seq));
  }
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic corpora sampled from the topic-level generative model.

struct GapModel {
  double short_weight = 0.7;
  int short_min = 1, short_max = 3;
  int long_min = 20, long_max = 30;
};

struct SyntheticSpec {
  std::size_t groups = 50;
  std::size_t topics = 5;
  std::size_t items = 30;
  std::size_t min_orders = 15;
  std::size_t max_orders = 25;
  GapModel gaps;
  double dirichlet_alpha = 0.1;
  double phi_variance = 4.0;
  std::size_t min_order_size = 10;
  std::size_t max_order_size = 30;
  DecaySpec decay{1.0, 0.3};
  std::size_t hidden = 10;
  double lstm_scale = 2.0;
  double projection_scale = 2.0;
  std::uint64_t seed = 1;

  void validate() const {
    require(groups >= 1 && topics >= 1 && items >= 1, ErrorKind::config,
            "synthetic corpus needs groups, topics and items >= 1");
    require(min_orders >= 1 && min_orders <= max_orders, ErrorKind::config, "bad order-count range");
    require(min_order_size >= 1 && min_order_size <= max_order_size, ErrorKind::config,
            "bad order-size range");
    require(gaps.short_weight >= 0.0 && gaps.short_weight <= 1.0, ErrorKind::config,
            "gap mixture weight must be in [0, 1]");
    require(gaps.short_min >= 0 && gaps.short_min <= gaps.short_max && gaps.long_min >= 0 &&
                gaps.long_min <= gaps.long_max && gaps.long_max <= kMaxGapDays,
            ErrorKind::config, "bad gap ranges");
    require(dirichlet_alpha > 0.0, ErrorKind::config, "dirichlet_alpha must be positive");
    require(phi_variance >= 0.0, ErrorKind::config, "phi_variance must be >= 0");
    require(hidden >= 1, ErrorKind::config, "generator hidden size must be >= 1");
    decay.validate();
  }
};

struct SyntheticTruth {
  SyntheticSpec spec;
  Mat B;            // items x topics, columns sum to one
  Mat phi;          // groups x topics
  ParamStore theta; // generator LSTM slots followed by "proj" (topics x hidden)
};

struct SyntheticCorpus {
  Dataset data;
  SyntheticTruth truth;
};

// Topic distribution for one generator step. Shared by the sampler and by
// anything that needs the generator's conditional expectations.
inline Vec generator_sigma(const SyntheticTruth& truth, const Vec& phi_d, const Vec& h, double rho_t) {
  const Vec hp = truth.theta.value(LstmCell::slot_count) * h;
  return softmax(rho_t * hp + (1.0 - rho_t) * phi_d);
}

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto K = static_cast<Eigen::Index>(spec.topics);
  const auto V = static_cast<Eigen::Index>(spec.items);
  const auto D = static_cast<Eigen::Index>(spec.groups);

  SyntheticCorpus out;
  SyntheticTruth& truth = out.truth;
  truth.spec = spec;

  Rng topic_rng(derive_seed(spec.seed, 1));
  truth.B = Mat(V, K);
  for (Eigen::Index k = 0; k < K; ++k) truth.B.col(k) = dirichlet(topic_rng, V, spec.dirichlet_alpha);

  Rng phi_rng(derive_seed(spec.seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(spec.phi_variance);
  truth.phi = Mat(D, K);
  for (Eigen::Index i = 0; i < truth.phi.size(); ++i)
    truth.phi.data()[i] = sd == 0.0 ? 0.0 : sd * normal(phi_rng);

  truth.theta = lstm_init(derive_seed(spec.seed, 3), spec.hidden, spec.items, spec.lstm_scale);
  {
    Rng proj_rng(derive_seed(spec.seed, 4));
    truth.theta.add("proj", uniform_matrix(proj_rng, K, static_cast<Eigen::Index>(spec.hidden),
                                           spec.projection_scale));
  }
  const LstmParams cell = LstmCell::bind(truth.theta, 0);
  const PowerLawDecay schedule(spec.decay);

  for (Eigen::Index i = 0; i < V; ++i) out.data.vocab.add(static_cast<ItemId>(i + 1));

  Rng seq_rng(derive_seed(spec.seed, 5));
  std::uniform_int_distribution<std::size_t> len_dist(spec.min_orders, spec.max_orders);
  std::uniform_int_distribution<std::size_t> size_dist(spec.min_order_size, spec.max_order_size);
  std::uniform_int_distribution<int> short_gap(spec.gaps.short_min, spec.gaps.short_max);
  std::uniform_int_distribution<int> long_gap(spec.gaps.long_min, spec.gaps.long_max);
  std::bernoulli_distribution pick_short(spec.gaps.short_weight);

  for (Eigen::Index d = 0; d < D; ++d) {
    GroupSequence seq;
    seq.group_id = static_cast<GroupId>(d + 1);
    const Vec phi_d = truth.phi.row(d).transpose();
    const std::size_t T = len_dist(seq_rng);
    CellState state = CellState::zeros(static_cast<Eigen::Index>(spec.hidden));
    Vec x = Vec::Zero(V);
    for (std::size_t t = 0; t < T; ++t) {
      Order o;
      o.delta_t = t == 0 ? 0.0 : static_cast<double>(pick_short(seq_rng) ? short_gap(seq_rng) : long_gap(seq_rng));
      state = lstm_forward(cell, x, state);
      const Vec sigma = generator_sigma(truth, phi_d, state.h, schedule(o.delta_t, t == 0));
      const Vec p = truth.B * sigma;
      std::discrete_distribution<Eigen::Index> item_dist(p.data(), p.data() + p.size());
      const std::size_t n = size_dist(seq_rng);
      o.counts = Vec::Zero(V);
      for (std::size_t j = 0; j < n; ++j) o.counts[item_dist(seq_rng)] += 1.0;
      x = normalized(o.counts);
      seq.orders.push_back(std::move(o));
    }
    out.data.groups.push_back(std::move(seq));
  }
  return out;
}

// Ground-truth sidecar. Schema "mmrnn.synthetic_truth/1":
//   { schema, seed, spec: {...}, B: [[V rows of K]], phi: [[D rows of K]],
//     theta: [{name, rows, cols, values: [row-major]}] }
inline nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    require(static_cast<Eigen::Index>(j[r].size()) == cols, ErrorKind::data, "ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline nlohmann::json params_to_json(const ParamStore& store) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : store) {
    std::vector<double> values(s.value.data(), s.value.data() + s.value.size());
    out.push_back({{"name", s.name}, {"rows", s.value.rows()}, {"cols", s.value.cols()}, {"values", values}});
  }
  return out;
}

inline ParamStore params_from_json(const nlohmann::json& j) {
  ParamStore store;
  for (const auto& s : j) {
    const auto rows = s.at("rows").get<Eigen::Index>();
    const auto cols = s.at("cols").get<Eigen::Index>();
    const auto values = s.at("values").get<std::vector<double>>();
    require(static_cast<Eigen::Index>(values.size()) == rows * cols, ErrorKind::data,
            "parameter slot size mismatch");
    store.add(s.at("name").get<std::string>(), Eigen::Map<const Mat>(values.data(), rows, cols));
  }
  return store;
}

inline nlohmann::json to_json(const SyntheticSpec& s) {
  return {{"groups", s.groups},
          {"topics", s.topics},
          {"items", s.items},
          {"min_orders", s.min_orders},
          {"max_orders", s.max_orders},
          {"gap_short_weight", s.gaps.short_weight},
          {"gap_short_range", {s.gaps.short_min, s.gaps.short_max}},
          {"gap_long_range", {s.gaps.long_min, s.gaps.long_max}},
          {"dirichlet_alpha", s.dirichlet_alpha},
          {"phi_variance", s.phi_variance},
          {"order_size_range", {s.min_order_size, s.max_order_size}},
          {"t0", s.decay.t0},
          {"kappa", s.decay.kappa},
          {"hidden", s.hidden},
          {"lstm_scale", s.lstm_scale},
          {"projection_scale", s.projection_scale},
          {"seed", s.seed}};
}

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  s.groups = j.at("groups");
  s.topics = j.at("topics");
  s.items = j.at("items");
  s.min_orders = j.at("min_orders");
  s.max_orders = j.at("max_orders");
  s.gaps.short_weight = j.at("gap_short_weight");
  s.gaps.short_min = j.at("gap_short_range")[0];
  s.gaps.short_max = j.at("gap_short_range")[1];
  s.gaps.long_min = j.at("gap_long_range")[0];
  s.gaps.long_max = j.at("gap_long_range")[1];
  s.dirichlet_alpha = j.at("dirichlet_alpha");
  s.phi_variance = j.at("phi_variance");
  s.min_order_size = j.at("order_size_range")[0];
  s.max_order_size = j.at("order_size_range")[1];
  s.decay.t0 = j.at("t0");
  s.decay.kappa = j.at("kappa");
  s.hidden = j.at("hidden");
  s.lstm_scale = j.at("lstm_scale");
  s.projection_scale = j.at("projection_scale");
  s.seed = j.at("seed");
  return s;
}

inline nlohmann::json truth_to_json(const SyntheticTruth& t) {
  return {{"schema", "mmrnn.synthetic_truth/1"},
          {"seed", t.spec.seed},
          {"spec", to_json(t.spec)},
          {"B", matrix_to_json(t.B)},
          {"phi", matrix_to_json(t.phi)},
          {"theta", params_to_json(t.theta)}};
}

inline SyntheticTruth truth_from_json(const nlohmann::json& j) {
  require(j.value("schema", "") == "mmrnn.synthetic_truth/1", ErrorKind::data,
          "not a synthetic ground-truth file");
  SyntheticTruth t;
  t.spec = synthetic_spec_from_json(j.at("spec"));
  t.B = matrix_from_json(j.at("B"));
  t.phi = matrix_from_json(j.at("phi"));
  t.theta = params_from_json(j.at("theta"));
  return t;
}

}  // namespace mmrnn
