#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "pmoe/data.hpp"
#include "pmoe/train.hpp"

namespace pmoe::app {

struct DataSource {
  enum class Kind { synth, csv } kind = Kind::synth;
  // synth
  std::uint64_t seed = 7;
  std::size_t rows = 10000;
  data::SynthOptions synth;
  // csv; relative paths resolve against the config file's directory
  std::filesystem::path path;
  data::Schema schema;

  std::size_t lags = data::kDefaultLags;
};

struct RunConfig {
  DataSource data;
  train::TrainConfig training;  // training.model.objectives / input_dim follow the data
  std::filesystem::path output = "run";
};

// Every key is checked; unknown keys and bad values throw ConfigError whose
// field() is the dotted path, e.g. "model.n_b". base_dir anchors relative paths.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
// Unreadable files and malformed JSON throw ConfigError with an empty path.
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical echo of every setting, defaults included.
nlohmann::json run_config_to_json(const RunConfig& config);

struct LoadedData {
  data::RawSeries raw;
  data::Splits splits;
  train::PreparedData prepared;
  std::uint64_t checksum = 0;
};

// Throws data::DataError (csv problems) or DomainError (too few rows).
LoadedData load_data(const DataSource& source);

// Fills objectives and input_dim from the data.
void bind_model_to_data(train::TrainConfig& training, const LoadedData& data);

// {"seeds", "workers", "cells": [{"label"?, "n_k", "n_s", "n_b"?, "n_l"?, "mode"?}]}
// or {"preset": "expert_grid" | "sensitivity" | "por_vs_fixed", "max_experts"?, "seeds"?, "workers"?}.
struct GridConfig {
  train::AblationSpec spec;
  std::size_t workers = 1;
};
GridConfig parse_grid(const nlohmann::json& j);
GridConfig load_grid(const std::filesystem::path& path);

}  // namespace pmoe::app
