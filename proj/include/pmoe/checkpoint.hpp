#pragma once

#include <filesystem>

#include <json.hpp>

#include "pmoe/model.hpp"

namespace pmoe::model {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json config_to_json(const OMoEConfig& config);
OMoEConfig config_from_json(const nlohmann::json& j);

// {"format", "version", "config", "cells": {cell: {group: [{"shape", "data"}, ...]}}}
// Cells are "shared" and "objective_<k>" (1-based).
nlohmann::json checkpoint_to_json(OMoEModel& model);
OMoEModel checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(OMoEModel& model, const std::filesystem::path& path);
OMoEModel load_checkpoint(const std::filesystem::path& path);

}  // namespace pmoe::model
