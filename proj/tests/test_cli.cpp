#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "app/commands.hpp"
#include "app/run_config.hpp"
#include "pmoe/errors.hpp"

namespace fs = std::filesystem;
using namespace pmoe;
using namespace pmoe::app;

namespace {

class Workspace {
 public:
  Workspace() {
    static int counter = 0;
    dir_ = fs::temp_directory_path() / ("pmoe_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }
  const fs::path& dir() const { return dir_; }
  fs::path write(const std::string& name, const std::string& content) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << content;
    return p;
  }

 private:
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kSmallRun = R"({
  "data": {"source": "synth", "seed": 3, "rows": 400, "lags": 2},
  "model": {"expert_width": 8, "expert_out": 4, "tower_widths": [4]},
  "training": {"epochs": 2, "batch_size": 32, "learning_rate": 0.05, "seed": 1},
  "output": "run"
})";

std::string config_error_field(const std::string& text) {
  try {
    parse_run_config(nlohmann::json::parse(text));
  } catch (const ConfigError& e) {
    return e.field();
  }
  return {};
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(PMOE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("run config parsing names the offending field", "[cli]") {
  CHECK(config_error_field(kSmallRun).empty());
  CHECK(config_error_field(R"({"model": {"n_b": 0}})") == "model.n_b");
  CHECK(config_error_field(R"({"model": {"n_l": 0}})") == "model.n_l");
  CHECK(config_error_field(R"({"model": {"n_k": 0, "n_s": 0}})") == "model.n_k");
  CHECK(config_error_field(R"({"model": {"n_b": -1}})") == "model.n_b");
  CHECK(config_error_field(R"({"model": {"colour": 3}})") == "model.colour");
  CHECK(config_error_field(R"({"extra": 1})") == "extra");
  CHECK(config_error_field(R"({"training": {"learning_rate": -1}})") == "training.learning_rate");
  CHECK(config_error_field(R"({"training": {"weight_mode": "magic"}})") == "training.weight_mode");
  CHECK(config_error_field(R"({"training": {"weight_mode": "fixed", "fixed_weights": [0.2, 0.2]}})") ==
        "training.fixed_weights");
  CHECK(config_error_field(R"({"solver": {"v_tol": 0}})") == "solver.v_tol");
  CHECK(config_error_field(R"({"solver": {"step_mode": "newton"}})") == "solver.step_mode");
  CHECK(config_error_field(R"({"data": {"source": "ftp"}})") == "data.source");
  CHECK(config_error_field(R"({"data": {"source": "synth", "rows": 5}})") == "data.rows");
}

TEST_CASE("run config echo parses back to the same config", "[cli]") {
  const RunConfig a = parse_run_config(nlohmann::json::parse(kSmallRun), "/base");
  const nlohmann::json echo = run_config_to_json(a);
  const RunConfig b = parse_run_config(echo, "/base");
  CHECK(run_config_to_json(b) == echo);
  CHECK(a.output == fs::path("/base/run"));
}

TEST_CASE("train writes four files and reruns byte-identically", "[cli]") {
  Workspace ws;
  const fs::path cfg = ws.write("run.json", kSmallRun);
  std::ostringstream out, err;
  REQUIRE(cmd_train(cfg, out, err) == kOk);
  const fs::path run = ws.dir() / "run";
  const std::vector<std::string> files{"checkpoint.json", "metrics.tsv", "trajectory.tsv", "manifest.json"};
  std::vector<std::string> first;
  for (const std::string& f : files) {
    REQUIRE(fs::exists(run / f));
    first.push_back(slurp(run / f));
  }
  std::size_t count = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(run)) ++count;
  CHECK(count == 4);

  const nlohmann::json manifest = nlohmann::json::parse(first[3]);
  CHECK(manifest.at("format") == "pmoe-run");
  CHECK(manifest.at("data").contains("checksum"));
  CHECK(manifest.at("config").at("data").at("rows") == 400);

  std::ostringstream out2, err2;
  REQUIRE(cmd_train(cfg, out2, err2) == kOk);
  for (std::size_t i = 0; i < files.size(); ++i) CHECK(slurp(run / files[i]) == first[i]);

  std::ostringstream eo, ee;
  CHECK(cmd_eval(cfg, run / "checkpoint.json", eo, ee) == kOk);
  CHECK(fs::exists(run / "eval_metrics.tsv"));

  std::ostringstream po, pe;
  CHECK(cmd_export_plots(run, po, pe) == kOk);
  for (const char* f : {"metric_curves.tsv", "weight_trajectory.tsv", "stationarity_residual.tsv",
                        "stationarity_residual_histogram.tsv", "prediction_residuals.tsv",
                        "prediction_residual_histogram.tsv"})
    CHECK(fs::exists(run / "plots" / f));
  CHECK(slurp(run / "plots" / "weight_trajectory.tsv").rfind("step\tseries\tvalue\n", 0) == 0);
}

TEST_CASE("command exit codes", "[cli]") {
  Workspace ws;
  std::ostringstream out, err;
  CHECK(cmd_train(ws.write("bad.json", R"({"model": {"n_b": 0}})"), out, err) == kConfigError);
  CHECK(err.str().find("model.n_b") != std::string::npos);
  CHECK(cmd_train(ws.dir() / "absent.json", out, err) == kConfigError);
  CHECK(cmd_train(ws.write("broken.json", "{not json"), out, err) == kConfigError);
  CHECK(cmd_train(ws.write("csv.json", R"({"data": {"source": "csv", "path": "missing.csv"}})"), out, err) ==
        kDataError);
  CHECK(cmd_train(ws.write("diverge.json", R"({
    "data": {"source": "synth", "seed": 3, "rows": 400, "lags": 2},
    "model": {"expert_width": 8, "expert_out": 4, "tower_widths": [4]},
    "training": {"epochs": 2, "batch_size": 32, "learning_rate": 1e6}})"),
                  out, err) == kDivergence);
  CHECK(cmd_export_plots(ws.dir() / "nothing", out, err) == kDataError);

  const fs::path cfg = ws.write("run.json", kSmallRun);
  CHECK(cmd_ablate(cfg, ws.write("empty.json", R"({"cells": []})"), out, err) == kConfigError);
  CHECK(cmd_eval(cfg, ws.dir() / "none.json", out, err) == kDataError);
  CHECK(cmd_solver_bench(0, 10, 1, out, err) == kConfigError);
}

TEST_CASE("ablate writes a results table and POR deltas", "[cli]") {
  Workspace ws;
  const fs::path cfg = ws.write("run.json", kSmallRun);
  const fs::path grid = ws.write("grid.json", R"({"cells": [
    {"label": "p", "n_k": 1, "n_s": 1, "n_b": 1, "n_l": 2, "mode": "por"},
    {"label": "f", "n_k": 1, "n_s": 1, "n_b": 1, "n_l": 2, "mode": "fixed"},
    {"label": "x", "n_k": 0, "n_s": 0}], "seeds": 2, "workers": 2})");
  std::ostringstream out, err;
  REQUIRE(cmd_ablate(cfg, grid, out, err) == kOk);
  const std::string table = slurp(ws.dir() / "run" / "ablation.tsv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 4);
  CHECK(fs::exists(ws.dir() / "run" / "por_deltas.tsv"));

  const fs::path failing = ws.write("fail.json", R"({"cells": [{"label": "x", "n_k": 0, "n_s": 0}], "seeds": 1})");
  CHECK(cmd_ablate(cfg, failing, out, err) == kFailure);
}

TEST_CASE("solver-bench reports zero violations and is reproducible", "[cli]") {
  std::ostringstream a, b, e;
  CHECK(cmd_solver_bench(3, 100, 42, a, e) == kOk);
  CHECK(a.str().find("violations: 0") != std::string::npos);
  CHECK(cmd_solver_bench(3, 100, 42, b, e) == kOk);
  CHECK(a.str() == b.str());

  std::ostringstream one;
  CHECK(cmd_solver_bench(1, 20, 1, one, e) == kOk);
  CHECK(one.str().find("violations: 0") != std::string::npos);
}

TEST_CASE("the pmoe binary maps failures to exit codes", "[cli]") {
  Workspace ws;
  CHECK(run_binary("solver-bench --k 2 --n 10 --seed 5") == 0);
  CHECK(run_binary("solver-bench --k 0 --n 10") == 2);
  CHECK(run_binary("frobnicate") == 2);
  CHECK(run_binary("train " + ws.write("bad.json", R"({"model": {"n_b": 0}})").string()) == 2);
  CHECK(run_binary("export-plots " + (ws.dir() / "missing").string()) == 3);
  CHECK(run_binary("train " + ws.write("run.json", kSmallRun).string()) == 0);
  CHECK(fs::exists(ws.dir() / "run" / "manifest.json"));
}
