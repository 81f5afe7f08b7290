#pragma once

#include "mmrnn/data.hpp"
#include "mmrnn/model.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace mmrnn {

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"loss", to_string(c.loss)},
          {"hidden", c.hidden},
          {"K", c.K},
          {"V", c.V},
          {"t0", c.decay.t0},
          {"kappa", c.decay.kappa},
          {"schedule", c.schedule == ScheduleKind::zero ? "zero" : "power_law"},
          {"a", c.a},
          {"b", c.b},
          {"c", c.c},
          {"init_scale", c.init_scale}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.mode = j.at("mode") == "topic" ? Mode::topic : Mode::basic;
  c.loss = j.at("loss") == "cross_entropy" ? LossKind::cross_entropy : LossKind::l2;
  c.hidden = j.at("hidden");
  c.K = j.at("K");
  c.V = j.at("V");
  c.decay = {j.at("t0"), j.at("kappa")};
  c.schedule = j.at("schedule") == "zero" ? ScheduleKind::zero : ScheduleKind::power_law;
  c.a = j.at("a");
  c.b = j.at("b");
  c.c = j.at("c");
  c.init_scale = j.at("init_scale");
  return c;
}

// Schema "mmrnn.model/1": { schema, cell, config, theta: [...slots],
//   phi: [{group_id, values}], B: [[...]] (topic mode only) }
template <RecurrentCell Cell>
nlohmann::json model_to_json(const MmRnn<Cell>& m) {
  nlohmann::json phi = nlohmann::json::array();
  for (const auto& b : m.biases())
    phi.push_back({{"group_id", b.group_id}, {"values", std::vector<double>(b.phi.data(), b.phi.data() + b.phi.size())}});
  nlohmann::json j = {{"schema", "mmrnn.model/1"},
                      {"cell", std::string(Cell::name)},
                      {"config", to_json(m.config())},
                      {"theta", params_to_json(m.theta())},
                      {"phi", phi}};
  if (m.topics()) j["B"] = matrix_to_json(m.topics()->B);
  return j;
}

template <RecurrentCell Cell>
MmRnn<Cell> model_from_json(const nlohmann::json& j) {
  require(j.value("schema", "") == "mmrnn.model/1", ErrorKind::data, "not a model file");
  require(j.at("cell") == std::string(Cell::name), ErrorKind::config,
          "model file holds a '" + j.at("cell").get<std::string>() + "' cell");
  const ModelConfig cfg = model_config_from_json(j.at("config"));
  std::vector<GroupId> ids;
  for (const auto& p : j.at("phi")) ids.push_back(p.at("group_id"));
  std::optional<TopicMatrix> topics;
  if (j.contains("B")) topics = TopicMatrix{matrix_from_json(j.at("B"))};
  MmRnn<Cell> m(cfg, 0, ids, std::move(topics));
  const ParamStore theta = params_from_json(j.at("theta"));
  require(theta.size() == m.theta().size(), ErrorKind::data, "model file has the wrong parameter slots");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    require(theta.slot(i).name == m.theta().slot(i).name &&
                theta.value(i).rows() == m.theta().value(i).rows() &&
                theta.value(i).cols() == m.theta().value(i).cols(),
            ErrorKind::data, "model file slot " + theta.slot(i).name + " does not match the configuration");
    m.theta().value(i) = theta.value(i);
  }
  std::size_t i = 0;
  for (const auto& p : j.at("phi")) {
    const auto v = p.at("values").get<std::vector<double>>();
    require(v.size() == cfg.K, ErrorKind::data, "bias vector has the wrong length");
    m.biases()[i++].phi = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return m;
}

}  // namespace mmrnn
