#include "pmoe/checkpoint.hpp"

#include <fstream>
#include <map>

#include "pmoe/errors.hpp"

namespace pmoe::model {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "pmoe-checkpoint";

json tensor_to_json(const Tensor& t) {
  return json{{"shape", t.shape()}, {"data", std::vector<double>(t.values().begin(), t.values().end())}};
}

Tensor tensor_from_json(const json& j) {
  return Tensor(j.at("shape").get<Shape>(), j.at("data").get<std::vector<double>>());
}

std::string cell_name(std::size_t k) { return "objective_" + std::to_string(k + 1); }

json cell_to_json(const std::vector<ParamGroup*>& groups) {
  json cell = json::object();
  for (const ParamGroup* g : groups) {
    json tensors = json::array();
    for (const Tensor& t : g->tensors) tensors.push_back(tensor_to_json(t));
    cell[g->name] = std::move(tensors);
  }
  return cell;
}

void cell_from_json(const json& cell, const std::vector<ParamGroup*>& groups, const std::string& name) {
  if (cell.size() != groups.size()) {
    throw DimensionError("checkpoint cell " + name + " has " + std::to_string(cell.size()) + " groups, model expects " +
                         std::to_string(groups.size()));
  }
  for (ParamGroup* g : groups) {
    if (!cell.contains(g->name)) throw DimensionError("checkpoint cell " + name + " lacks group " + g->name);
    const json& tensors = cell.at(g->name);
    if (tensors.size() != g->tensors.size()) throw DimensionError("checkpoint group " + g->name + ": tensor count");
    for (std::size_t i = 0; i < g->tensors.size(); ++i) {
      Tensor t = tensor_from_json(tensors.at(i));
      if (!t.same_shape(g->tensors[i])) {
        throw DimensionError("checkpoint group " + g->name + ": shape " + shape_string(t.shape()) + " vs " +
                             shape_string(g->tensors[i].shape()));
      }
      g->tensors[i] = std::move(t);
    }
  }
}

}  // namespace

json config_to_json(const OMoEConfig& c) {
  return json{{"objectives", c.objectives},
              {"input_dim", c.input_dim},
              {"n_k", c.specific_experts},
              {"n_s", c.shared_experts},
              {"n_b", c.blocks},
              {"n_l", c.expert_layers},
              {"expert_width", c.expert_width},
              {"expert_out", c.expert_out},
              {"tower_widths", c.tower_widths},
              {"specific_experts_shared", c.specific_experts_shared}};
}

OMoEConfig config_from_json(const json& j) {
  OMoEConfig c;
  c.objectives = j.at("objectives").get<std::size_t>();
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.specific_experts = j.at("n_k").get<std::size_t>();
  c.shared_experts = j.at("n_s").get<std::size_t>();
  c.blocks = j.at("n_b").get<std::size_t>();
  c.expert_layers = j.at("n_l").get<std::size_t>();
  c.expert_width = j.at("expert_width").get<std::size_t>();
  c.expert_out = j.at("expert_out").get<std::size_t>();
  c.tower_widths = j.at("tower_widths").get<std::vector<std::size_t>>();
  c.specific_experts_shared = j.value("specific_experts_shared", false);
  return c;
}

json checkpoint_to_json(OMoEModel& model) {
  const ParamPartition cells = model.partition();
  json out;
  out["format"] = kFormat;
  out["version"] = kCheckpointVersion;
  out["config"] = config_to_json(model.config());
  out["cells"]["shared"] = cell_to_json(cells.shared);
  for (std::size_t k = 0; k < cells.objectives(); ++k) out["cells"][cell_name(k)] = cell_to_json(cells.specific[k]);
  return out;
}

OMoEModel checkpoint_from_json(const json& j) {
  if (j.value("format", "") != kFormat) throw DomainError("not a pmoe checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) {
    throw DomainError("unsupported checkpoint version " + j.value("version", json(0)).dump());
  }
  // Initial values are overwritten below, the seed does not matter.
  OMoEModel model(config_from_json(j.at("config")), 0);
  const ParamPartition cells = model.partition();
  const json& stored = j.at("cells");
  if (stored.size() != cells.objectives() + 1) throw DimensionError("checkpoint cell count does not match config");
  cell_from_json(stored.at("shared"), cells.shared, "shared");
  for (std::size_t k = 0; k < cells.objectives(); ++k)
    cell_from_json(stored.at(cell_name(k)), cells.specific[k], cell_name(k));
  return model;
}

void save_checkpoint(OMoEModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(model).dump() << '\n';
}

OMoEModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  return checkpoint_from_json(json::parse(in));
}

}  // namespace pmoe::model
