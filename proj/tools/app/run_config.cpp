#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "pmoe/errors.hpp"

namespace pmoe::app {

using nlohmann::json;

namespace {

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& item : j.items())
    if (!known.count(item.key())) throw ConfigError(join(path, item.key()), "unknown key");
}

std::size_t get_count(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) throw ConfigError(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

std::vector<std::string> get_strings(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_string(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// Reads j[key] into out when present.
template <class T, class Get>
void read(const json& j, const std::string& path, const char* key, T& out, Get get) {
  if (j.contains(key)) out = get(j.at(key), join(path, key));
}

void prefixed(const std::string& prefix, const auto& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    throw ConfigError(join(prefix, e.field()), what.substr(e.field().size() + 2));
  }
}

DataSource parse_data(const json& j, const std::filesystem::path& base_dir) {
  const std::string p = "data";
  expect_object(j, p);
  DataSource d;
  const std::string source = j.contains("source") ? get_string(j.at("source"), "data.source") : "synth";
  if (source == "synth") {
    d.kind = DataSource::Kind::synth;
    reject_unknown(j, p, {"source", "seed", "rows", "lags", "synth"});
    read(j, p, "seed", d.seed, get_count);
    read(j, p, "rows", d.rows, get_count);
    if (j.contains("synth")) {
      const json& s = j.at("synth");
      const std::string sp = "data.synth";
      expect_object(s, sp);
      reject_unknown(s, sp,
                     {"persistence", "shared_gain", "opposing_gain", "specific_gain", "noise_y1", "noise_y2"});
      read(s, sp, "persistence", d.synth.persistence, get_number);
      read(s, sp, "shared_gain", d.synth.shared_gain, get_number);
      read(s, sp, "opposing_gain", d.synth.opposing_gain, get_number);
      read(s, sp, "specific_gain", d.synth.specific_gain, get_number);
      read(s, sp, "noise_y1", d.synth.noise_y1, get_number);
      read(s, sp, "noise_y2", d.synth.noise_y2, get_number);
      if (!(d.synth.persistence >= 0.0 && d.synth.persistence < 1.0))
        throw ConfigError("data.synth.persistence", "must lie in [0, 1)");
      if (d.synth.noise_y1 < 0.0) throw ConfigError("data.synth.noise_y1", "must be >= 0");
      if (d.synth.noise_y2 < 0.0) throw ConfigError("data.synth.noise_y2", "must be >= 0");
    }
    if (d.rows < 20) throw ConfigError("data.rows", "must be >= 20");
  } else if (source == "csv") {
    d.kind = DataSource::Kind::csv;
    reject_unknown(j, p, {"source", "path", "process", "quality", "time_column", "delimiter", "lags", "pre_embedded"});
    if (!j.contains("path")) throw ConfigError("data.path", "required for csv sources");
    d.path = get_string(j.at("path"), "data.path");
    if (d.path.is_relative() && !base_dir.empty()) d.path = base_dir / d.path;
    read(j, p, "process", d.schema.process, get_strings);
    read(j, p, "quality", d.schema.quality, get_strings);
    if (j.contains("time_column") && !j.at("time_column").is_null())
      d.schema.time_column = get_string(j.at("time_column"), "data.time_column");
    if (j.contains("delimiter")) {
      const std::string delim = get_string(j.at("delimiter"), "data.delimiter");
      if (delim.size() != 1) throw ConfigError("data.delimiter", "must be a single character");
      d.schema.delimiter = delim[0];
    }
  } else {
    throw ConfigError("data.source", "must be \"synth\" or \"csv\"");
  }
  read(j, p, "lags", d.lags, get_count);
  if (d.lags < 1) throw ConfigError("data.lags", "must be >= 1");
  if (j.contains("pre_embedded")) {
    if (!j.at("pre_embedded").is_boolean()) throw ConfigError("data.pre_embedded", "expected true or false");
    // process columns already hold the lagged inputs
    if (j.at("pre_embedded").get<bool>()) {
      if (j.contains("lags") && d.lags != 1) throw ConfigError("data.lags", "must be 1 for pre-embedded data");
      d.lags = 1;
    }
  }
  return d;
}

void parse_model(const json& j, model::OMoEConfig& m) {
  const std::string p = "model";
  expect_object(j, p);
  reject_unknown(j, p, {"n_k", "n_s", "n_b", "n_l", "expert_width", "expert_out", "tower_widths",
                        "specific_experts_shared"});
  read(j, p, "n_k", m.specific_experts, get_count);
  read(j, p, "n_s", m.shared_experts, get_count);
  read(j, p, "n_b", m.blocks, get_count);
  read(j, p, "n_l", m.expert_layers, get_count);
  read(j, p, "expert_width", m.expert_width, get_count);
  read(j, p, "expert_out", m.expert_out, get_count);
  if (j.contains("tower_widths")) {
    const json& t = j.at("tower_widths");
    if (!t.is_array()) throw ConfigError("model.tower_widths", "expected an array");
    m.tower_widths.clear();
    for (std::size_t i = 0; i < t.size(); ++i)
      m.tower_widths.push_back(get_count(t[i], "model.tower_widths[" + std::to_string(i) + "]"));
  }
  if (j.contains("specific_experts_shared")) {
    if (!j.at("specific_experts_shared").is_boolean())
      throw ConfigError("model.specific_experts_shared", "expected true or false");
    m.specific_experts_shared = j.at("specific_experts_shared").get<bool>();
  }
}

void parse_training(const json& j, train::TrainConfig& t) {
  const std::string p = "training";
  expect_object(j, p);
  reject_unknown(j, p, {"epochs", "batch_size", "learning_rate", "weight_mode", "fixed_weights", "schedule", "seed"});
  read(j, p, "epochs", t.epochs, get_count);
  read(j, p, "batch_size", t.batch_size, get_count);
  read(j, p, "learning_rate", t.learning_rate, get_number);
  read(j, p, "seed", t.seed, get_count);
  if (j.contains("weight_mode")) {
    const std::string mode = get_string(j.at("weight_mode"), "training.weight_mode");
    if (mode == "por")
      t.weight_mode = train::WeightMode::por;
    else if (mode == "fixed")
      t.weight_mode = train::WeightMode::fixed;
    else
      throw ConfigError("training.weight_mode", "must be \"por\" or \"fixed\"");
  }
  if (j.contains("fixed_weights")) {
    const json& w = j.at("fixed_weights");
    if (!w.is_array()) throw ConfigError("training.fixed_weights", "expected an array");
    t.fixed_weights.clear();
    for (std::size_t i = 0; i < w.size(); ++i)
      t.fixed_weights.push_back(get_number(w[i], "training.fixed_weights[" + std::to_string(i) + "]"));
  }
  if (j.contains("schedule")) {
    const std::string s = get_string(j.at("schedule"), "training.schedule");
    if (s == "per_batch")
      t.schedule = train::WeightSchedule::per_batch;
    else if (s == "per_epoch")
      t.schedule = train::WeightSchedule::per_epoch;
    else
      throw ConfigError("training.schedule", "must be \"per_batch\" or \"per_epoch\"");
  }
}

void parse_solver(const json& j, por::FWConfig& fw) {
  const std::string p = "solver";
  expect_object(j, p);
  reject_unknown(j, p, {"max_iterations", "v_tol", "step_mode"});
  read(j, p, "max_iterations", fw.max_iterations, get_count);
  read(j, p, "v_tol", fw.v_tol, get_number);
  if (j.contains("step_mode")) {
    const std::string s = get_string(j.at("step_mode"), "solver.step_mode");
    if (s == "exact_line_search")
      fw.step_mode = por::StepMode::exact_line_search;
    else if (s == "fixed_decay")
      fw.step_mode = por::StepMode::fixed_decay;
    else
      throw ConfigError("solver.step_mode", "must be \"exact_line_search\" or \"fixed_decay\"");
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
}

}  // namespace

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  expect_object(j, "");
  reject_unknown(j, "", {"data", "model", "training", "solver", "output"});
  RunConfig c;
  if (j.contains("data")) c.data = parse_data(j.at("data"), base_dir);
  if (j.contains("model")) parse_model(j.at("model"), c.training.model);
  if (j.contains("training")) parse_training(j.at("training"), c.training);
  if (j.contains("solver")) parse_solver(j.at("solver"), c.training.fw);
  if (j.contains("output")) c.output = get_string(j.at("output"), "output");
  if (c.output.empty()) throw ConfigError("output", "must not be empty");
  if (c.output.is_relative() && !base_dir.empty()) c.output = base_dir / c.output;

  // Everything except the data-dependent sizes is checked before any work starts.
  model::OMoEConfig probe = c.training.model;
  probe.objectives = c.data.kind == DataSource::Kind::csv ? c.data.schema.quality.size() : 2;
  probe.input_dim = 1;
  prefixed("model", [&] { probe.validate(); });
  prefixed("solver", [&] { c.training.fw.validate(); });
  train::TrainConfig training = c.training;
  training.model = probe;
  prefixed("training", [&] { training.validate(); });
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json_file(path), path.parent_path());
}

json run_config_to_json(const RunConfig& c) {
  json data;
  if (c.data.kind == DataSource::Kind::synth) {
    const data::SynthOptions& s = c.data.synth;
    data = json{{"source", "synth"},
                {"seed", c.data.seed},
                {"rows", c.data.rows},
                {"synth",
                 {{"persistence", s.persistence},
                  {"shared_gain", s.shared_gain},
                  {"opposing_gain", s.opposing_gain},
                  {"specific_gain", s.specific_gain},
                  {"noise_y1", s.noise_y1},
                  {"noise_y2", s.noise_y2}}}};
  } else {
    data = json{{"source", "csv"},
                {"path", c.data.path.string()},
                {"process", c.data.schema.process},
                {"quality", c.data.schema.quality},
                {"time_column", c.data.schema.time_column ? json(*c.data.schema.time_column) : json(nullptr)},
                {"delimiter", std::string(1, c.data.schema.delimiter)}};
  }
  data["lags"] = c.data.lags;
  const model::OMoEConfig& m = c.training.model;
  const train::TrainConfig& t = c.training;
  return json{{"data", data},
              {"model",
               {{"n_k", m.specific_experts},
                {"n_s", m.shared_experts},
                {"n_b", m.blocks},
                {"n_l", m.expert_layers},
                {"expert_width", m.expert_width},
                {"expert_out", m.expert_out},
                {"tower_widths", m.tower_widths},
                {"specific_experts_shared", m.specific_experts_shared}}},
              {"training",
               {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"weight_mode", t.weight_mode == train::WeightMode::por ? "por" : "fixed"},
                {"fixed_weights", t.fixed_weights},
                {"schedule", t.schedule == train::WeightSchedule::per_batch ? "per_batch" : "per_epoch"},
                {"seed", t.seed}}},
              {"solver",
               {{"max_iterations", t.fw.max_iterations},
                {"v_tol", t.fw.v_tol},
                {"step_mode", t.fw.step_mode == por::StepMode::exact_line_search ? "exact_line_search"
                                                                                 : "fixed_decay"}}},
              {"output", c.output.string()}};
}

LoadedData load_data(const DataSource& source) {
  LoadedData out;
  out.raw = source.kind == DataSource::Kind::synth ? data::synth_sru(source.seed, source.rows, source.synth)
                                                   : data::load_csv(source.path, source.schema);
  out.checksum = data::checksum(out.raw);
  out.splits = data::split(data::lag_embed(out.raw, source.lags));
  out.prepared = train::prepare(out.splits);
  return out;
}

void bind_model_to_data(train::TrainConfig& training, const LoadedData& data) {
  training.model.objectives = data.prepared.objectives();
  training.model.input_dim = data.prepared.features();
  prefixed("training", [&] { training.validate(); });
}

GridConfig parse_grid(const json& j) {
  expect_object(j, "grid");
  reject_unknown(j, "grid", {"preset", "max_experts", "cells", "seeds", "workers"});
  GridConfig g;
  std::size_t seeds = 5;
  read(j, "grid", "seeds", seeds, get_count);
  read(j, "grid", "workers", g.workers, get_count);
  if (seeds < 1) throw ConfigError("grid.seeds", "must be >= 1");
  if (g.workers < 1) throw ConfigError("grid.workers", "must be >= 1");
  if (j.contains("preset")) {
    if (j.contains("cells")) throw ConfigError("grid.cells", "cannot be combined with a preset");
    std::size_t max_experts = 5;
    read(j, "grid", "max_experts", max_experts, get_count);
    const std::string preset = get_string(j.at("preset"), "grid.preset");
    if (preset == "expert_grid")
      g.spec = train::AblationSpec::expert_grid(max_experts, seeds);
    else if (preset == "sensitivity")
      g.spec = train::AblationSpec::sensitivity(seeds);
    else if (preset == "por_vs_fixed")
      g.spec = train::AblationSpec::por_vs_fixed(max_experts, seeds);
    else
      throw ConfigError("grid.preset", "must be expert_grid, sensitivity or por_vs_fixed");
  } else if (j.contains("cells")) {
    const json& cells = j.at("cells");
    if (!cells.is_array()) throw ConfigError("grid.cells", "expected an array");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string p = "grid.cells[" + std::to_string(i) + "]";
      const json& c = cells[i];
      expect_object(c, p);
      reject_unknown(c, p, {"label", "n_k", "n_s", "n_b", "n_l", "mode"});
      train::AblationCell cell;
      read(c, p, "n_k", cell.n_k, get_count);
      read(c, p, "n_s", cell.n_s, get_count);
      read(c, p, "n_b", cell.n_b, get_count);
      read(c, p, "n_l", cell.n_l, get_count);
      if (c.contains("mode")) {
        const std::string mode = get_string(c.at("mode"), p + ".mode");
        if (mode != "por" && mode != "fixed") throw ConfigError(p + ".mode", "must be \"por\" or \"fixed\"");
        cell.mode = mode == "por" ? train::WeightMode::por : train::WeightMode::fixed;
      }
      std::ostringstream label;
      label << "nk" << cell.n_k << "_ns" << cell.n_s << "_nb" << cell.n_b << "_nl" << cell.n_l << "_"
            << (cell.mode == train::WeightMode::por ? "por" : "fixed");
      cell.label = c.contains("label") ? get_string(c.at("label"), p + ".label") : label.str();
      g.spec.cells.push_back(std::move(cell));
    }
  }
  if (g.spec.cells.empty()) throw ConfigError("grid.cells", "grid has no cells");
  g.spec.seeds = seeds;
  return g;
}

GridConfig load_grid(const std::filesystem::path& path) { return parse_grid(read_json_file(path)); }

}  // namespace pmoe::app
