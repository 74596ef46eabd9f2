#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "pmoe/checkpoint.hpp"
#include "pmoe/errors.hpp"
#include "pmoe/report.hpp"
#include "run_config.hpp"

namespace pmoe::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kHistogramBins = 20;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw data::DataError("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

json metrics_json(const std::vector<train::ObjectiveMetrics>& metrics, const std::vector<std::string>& names) {
  json out = json::array();
  for (std::size_t k = 0; k < metrics.size(); ++k)
    out.push_back({{"objective", k + 1},
                   {"name", k < names.size() ? names[k] : ""},
                   {"rmse", metrics[k].rmse},
                   {"mae", metrics[k].mae},
                   {"r2", metrics[k].r2 ? json(*metrics[k].r2) : json(nullptr)}});
  return out;
}

void print_metrics(std::ostream& out, const std::vector<train::ObjectiveMetrics>& metrics,
                   const std::vector<std::string>& names) {
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    out << "  " << (k < names.size() ? names[k] : "y" + std::to_string(k + 1)) << ": RMSE "
        << report::format_double(metrics[k].rmse) << "  MAE " << report::format_double(metrics[k].mae) << "  R2 "
        << (metrics[k].r2 ? report::format_double(*metrics[k].r2) : "undefined") << '\n';
  }
}

// Shared error mapping for the data-driven commands.
template <class Body>
int guarded(std::ostream& err, Body body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const data::DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const train::DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const DomainError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

LoadedData load_checked(const DataSource& source) {
  try {
    return load_data(source);
  } catch (const DomainError& e) {
    throw data::DataError(e.what());
  } catch (const DimensionError& e) {
    throw data::DataError(e.what());
  }
}

}  // namespace

int cmd_train(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = load_run_config(config_path);
    const LoadedData data = load_checked(config.data);
    bind_model_to_data(config.training, data);
    out << "training on " << data.prepared.train_x.rows() << " samples, " << data.prepared.features()
        << " features, " << data.prepared.objectives() << " objectives\n";
    train::TrainResult result = train::train(config.training, data.prepared);

    fs::create_directories(config.output);
    model::save_checkpoint(result.model, config.output / "checkpoint.json");
    write_file(config.output / "metrics.tsv", report::metrics_to_tsv(result.metrics));
    write_file(config.output / "trajectory.tsv", report::trajectory_to_tsv(result.trajectory));
    json manifest{{"format", "pmoe-run"},
                  {"version", 1},
                  {"config", run_config_to_json(config)},
                  {"seed", config.training.seed},
                  {"data",
                   {{"checksum", hex(data.checksum)},
                    {"rows", data.raw.rows()},
                    {"dropped_rows", data.raw.dropped_rows},
                    {"process", data.raw.process_names},
                    {"quality", data.raw.quality_names},
                    {"samples",
                     {{"train", data.splits.train.size()},
                      {"validation", data.splits.validation.size()},
                      {"test", data.splits.test.size()}}}}},
                  {"best_epoch", result.metrics.best_epoch},
                  {"test_metrics", metrics_json(result.metrics.test, data.raw.quality_names)},
                  {"files", {"checkpoint.json", "metrics.tsv", "trajectory.tsv", "manifest.json"}}};
    write_file(config.output / "manifest.json", manifest.dump(2) + "\n");

    out << "best epoch " << result.metrics.best_epoch << " of " << config.training.epochs << "; test metrics:\n";
    print_metrics(out, result.metrics.test, data.raw.quality_names);
    out << "wrote " << config.output.string() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_eval(const fs::path& config_path, const fs::path& checkpoint, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = load_run_config(config_path);
    const LoadedData data = load_checked(config.data);
    model::OMoEModel model = [&] {
      try {
        return model::load_checkpoint(checkpoint);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw data::DataError("checkpoint " + checkpoint.string() + ": " + e.what());
      }
    }();
    if (model.config().input_dim != data.prepared.features())
      throw ConfigError("model.input_dim", "checkpoint expects " + std::to_string(model.config().input_dim) +
                                               " features, data has " + std::to_string(data.prepared.features()));
    if (model.config().objectives != data.prepared.objectives())
      throw ConfigError("model.objectives", "checkpoint predicts " + std::to_string(model.config().objectives) +
                                                " objectives, data has " + std::to_string(data.prepared.objectives()));
    const auto physical = train::evaluate(model, data.prepared.test_x, data.prepared.test_y, data.prepared.target_scaler);
    const auto scaled = train::evaluate_scaled(model, data.prepared.test_x, data.prepared.test_y);
    fs::create_directories(config.output);
    write_file(config.output / "eval_metrics.tsv", report::test_metrics_to_tsv(physical, scaled));
    out << "test metrics (" << data.prepared.test_x.rows() << " samples):\n";
    print_metrics(out, physical, data.raw.quality_names);
    return static_cast<int>(kOk);
  });
}

int cmd_ablate(const fs::path& config_path, const fs::path& grid_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = load_run_config(config_path);
    const GridConfig grid = load_grid(grid_path);
    const LoadedData data = load_checked(config.data);
    bind_model_to_data(config.training, data);
    out << "ablation: " << grid.spec.cells.size() << " cells x " << grid.spec.seeds << " seeds\n";
    const std::vector<train::AblationRow> rows =
        train::run_ablation(grid.spec, config.training, data.prepared, grid.workers);

    fs::create_directories(config.output);
    write_file(config.output / "ablation.tsv", train::ablation_to_tsv(rows));
    const std::vector<train::PorDelta> deltas = train::por_fixed_deltas(rows);
    if (!deltas.empty()) {
      std::ostringstream t;
      t << "n_e";
      for (std::size_t k = 1; k <= deltas.front().delta.size(); ++k) t << "\tdelta_r2_" << k;
      t << '\n';
      for (const train::PorDelta& d : deltas) {
        t << d.n_e;
        for (double v : d.delta) t << '\t' << report::format_double(v);
        t << '\n';
      }
      write_file(config.output / "por_deltas.tsv", t.str());
    }

    std::size_t succeeded = 0;
    for (const train::AblationRow& r : rows) {
      out << "  " << r.cell.label << ": " << r.r2.size() << "/" << grid.spec.seeds << " runs";
      for (std::size_t k = 0; k < r.r2_mean.size(); ++k)
        out << "  R2_" << k + 1 << " " << std::fixed << std::setprecision(4) << r.r2_mean[k] << " +- "
            << r.r2_std[k] << std::defaultfloat;
      out << '\n';
      for (const std::string& e : r.errors) err << "  " << r.cell.label << " failed: " << e << '\n';
      if (r.ok()) ++succeeded;
    }
    out << "wrote " << (config.output / "ablation.tsv").string() << '\n';
    return static_cast<int>(succeeded > 0 ? kOk : kFailure);
  });
}

int cmd_solver_bench(long k, long instances, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  if (k < 1) {
    err << "config error: k: must be >= 1\n";
    return kConfigError;
  }
  if (instances < 1) {
    err << "config error: n: must be >= 1\n";
    return kConfigError;
  }
  struct Row {
    std::string name;
    std::size_t checked = 0;
    std::size_t violations = 0;
    double worst = std::numeric_limits<double>::infinity();

    void add(const por::BoundReport& r) {
      checked += r.checked;
      violations += r.violations;
      if (r.checked > 0) worst = std::min(worst, r.worst_margin);
    }
  };
  Row primal{"primal_bound_R100"}, gap2{"gap_bound_R2"}, gap10{"gap_bound_R10"}, gap50{"gap_bound_R50"},
      lemma_fixed{"descent_lemma_fixed_decay"}, lemma_exact{"descent_lemma_line_search"}, oracle{"oracle_agreement"};
  constexpr double kOracleTolerance = 1e-3;
  // R = 100 leaves some K >= 3 instances a few 1e-3 above the optimum (sublinear zig-zag).
  const por::FWConfig agreement{1000, 1e-6, por::StepMode::exact_line_search};

  const auto K = static_cast<std::size_t>(k);
  SeededRng master(seed);
  for (long i = 0; i < instances; ++i) {
    SeededRng rng(master.derive(static_cast<std::uint64_t>(i)));
    const por::GramMatrix m = por::random_gram(rng, K);
    primal.add(por::verify_primal_bound(m, 100));
    gap2.add(por::verify_gap_bound(m, 2));
    gap10.add(por::verify_gap_bound(m, 10));
    gap50.add(por::verify_gap_bound(m, 50));
    por::FWConfig fixed{100, std::numeric_limits<double>::min(), por::StepMode::fixed_decay};
    lemma_fixed.add(por::verify_descent_lemma(m, por::frank_wolfe(m, fixed).diagnostics));
    const por::FWResult exact = por::frank_wolfe(m);
    lemma_exact.add(por::verify_descent_lemma(m, exact.diagnostics));
    const por::FWResult solved = por::frank_wolfe(m, agreement);
    const double diff = por::quadratic_value(m, solved.weights.values()) - por::min_norm_oracle(m).objective;
    ++oracle.checked;
    if (std::abs(diff) > kOracleTolerance) ++oracle.violations;
    oracle.worst = std::min(oracle.worst, kOracleTolerance - std::abs(diff));
  }

  std::size_t total = 0;
  out << "solver-bench k=" << K << " instances=" << instances << " seed=" << seed << '\n';
  out << "check\tchecked\tviolations\tworst_margin\n";
  for (const Row* r : {&primal, &gap2, &gap10, &gap50, &lemma_fixed, &lemma_exact, &oracle}) {
    out << r->name << '\t' << r->checked << '\t' << r->violations << '\t'
        << (std::isfinite(r->worst) ? report::format_double(r->worst) : "NA") << '\n';
    total += r->violations;
  }
  out << "violations: " << total << '\n';
  return total == 0 ? kOk : kFailure;
}

int cmd_export_plots(const fs::path& run_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    for (const char* name : {"metrics.tsv", "trajectory.tsv"})
      if (!fs::is_regular_file(run_dir / name)) throw data::DataError("missing " + (run_dir / name).string());
    const report::Table metrics = report::parse_tsv(read_file(run_dir / "metrics.tsv"));
    const report::Table trajectory = report::parse_tsv(read_file(run_dir / "trajectory.tsv"));

    const fs::path plots = run_dir / "plots";
    fs::create_directories(plots);
    write_file(plots / "metric_curves.tsv", report::long_to_tsv(report::to_long(metrics, "epoch")));

    std::vector<report::LongRow> weights, residuals;
    std::vector<double> residual_values;
    const std::size_t step_col = trajectory.column("step");
    const std::size_t residual_col = trajectory.column("residual");
    for (const auto& row : trajectory.rows) {
      for (std::size_t c = 0; c < trajectory.columns.size(); ++c) {
        const std::string& name = trajectory.columns[c];
        if (name.rfind("w_", 0) == 0 || name.rfind("loss_", 0) == 0) weights.push_back({row[step_col], name, row[c]});
      }
      residuals.push_back({row[step_col], "residual", row[residual_col]});
      residual_values.push_back(row[residual_col]);
    }
    write_file(plots / "weight_trajectory.tsv", report::long_to_tsv(weights));
    write_file(plots / "stationarity_residual.tsv", report::long_to_tsv(residuals));
    write_file(plots / "stationarity_residual_histogram.tsv",
               report::histogram_to_tsv(report::histogram(residual_values, kHistogramBins)));
    std::size_t files = 4;

    // Test-set prediction residuals need the run's data and model.
    if (fs::is_regular_file(run_dir / "manifest.json") && fs::is_regular_file(run_dir / "checkpoint.json")) {
      json manifest;
      try {
        manifest = json::parse(read_file(run_dir / "manifest.json"));
      } catch (const json::exception& e) {
        throw data::DataError("manifest.json: " + std::string(e.what()));
      }
      if (!manifest.contains("config")) throw data::DataError("manifest.json has no config");
      const RunConfig config = parse_run_config(manifest.at("config"));
      const LoadedData data = load_checked(config.data);
      if (manifest.contains("data") && manifest["data"].value("checksum", "") != hex(data.checksum))
        throw data::DataError("regenerated data does not match the manifest checksum");
      model::OMoEModel model = model::load_checkpoint(run_dir / "checkpoint.json");
      const Tensor truth = data.prepared.target_scaler.inverse_transform(data.prepared.test_y);
      const Tensor pred = data.prepared.target_scaler.inverse_transform(model.predict(data.prepared.test_x));
      std::vector<report::LongRow> rows;
      std::ostringstream hist;
      hist << "series\tbin\tlower\tupper\tcount\n";
      for (std::size_t k = 0; k < truth.cols(); ++k) {
        const std::string series = "residual_" + std::to_string(k + 1);
        std::vector<double> values;
        for (std::size_t i = 0; i < truth.rows(); ++i) {
          values.push_back(truth(i, k) - pred(i, k));
          rows.push_back({static_cast<double>(i), series, values.back()});
        }
        const report::Histogram h = report::histogram(values, kHistogramBins);
        for (std::size_t b = 0; b < h.counts.size(); ++b)
          hist << series << '\t' << b + 1 << '\t' << report::format_double(h.lower[b]) << '\t'
               << report::format_double(h.upper[b]) << '\t' << h.counts[b] << '\n';
      }
      write_file(plots / "prediction_residuals.tsv", report::long_to_tsv(rows));
      write_file(plots / "prediction_residual_histogram.tsv", hist.str());
      files += 2;
    } else {
      err << "note: no manifest/checkpoint in " << run_dir.string() << ", prediction residuals skipped\n";
    }
    out << "wrote " << files << " tables to " << plots.string() << '\n';
    return static_cast<int>(kOk);
  });
}

}  // namespace pmoe::app
