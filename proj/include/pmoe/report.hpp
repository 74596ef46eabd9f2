#pragma once

#include <string>
#include <vector>

#include "pmoe/train.hpp"

namespace pmoe::report {

// Per-epoch rows: epoch, selection_loss, then train_loss_k, val_mse_k, val_r2_k, weight_k per objective.
std::string metrics_to_tsv(const train::MetricsReport& report);
// Per-step rows: step, epoch, residual, fw_iterations, w_k..., loss_k...
std::string trajectory_to_tsv(const train::WeightTrajectory& trajectory);
// Test metrics: objective, rmse, mae, r2 ("NA" when undefined), rmse_scaled, mae_scaled, r2_scaled.
std::string test_metrics_to_tsv(const std::vector<train::ObjectiveMetrics>& physical,
                                const std::vector<train::ObjectiveMetrics>& scaled);

// Header plus rows of a tab-separated table with numeric cells.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  // Throws DataError for unknown names.
  std::size_t column(const std::string& name) const;
};

// Throws DataError on ragged rows or non-numeric cells ("NA" reads as NaN).
Table parse_tsv(const std::string& text);

struct LongRow {
  double step;
  std::string series;
  double value;
};

// Tidy (step, series, value) table from every non-key column of a table.
std::vector<LongRow> to_long(const Table& table, const std::string& key);

// Equal-width bins over [min, max]; all values land in the single bin when the range is empty.
struct Histogram {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> counts;
};
Histogram histogram(const std::vector<double>& values, std::size_t bins);

std::string long_to_tsv(const std::vector<LongRow>& rows);
std::string histogram_to_tsv(const Histogram& h);

// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace pmoe::report
