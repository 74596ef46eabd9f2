#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmoe/tensor.hpp"

namespace pmoe::data {

// Any failure to obtain a usable dataset.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public DataError {
 public:
  explicit SchemaError(std::string column)
      : DataError("missing column \"" + column + "\""), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class RowError : public DataError {
 public:
  RowError(std::size_t line, const std::string& message)
      : DataError("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Schema {
  std::vector<std::string> process{"x1", "x2", "x3", "x4", "x5"};
  std::vector<std::string> quality{"y1", "y2"};
  std::optional<std::string> time_column;
  char delimiter = ',';
};

/// Time-ordered process (inputs) and quality (targets) columns.
struct RawSeries {
  std::vector<std::string> process_names;
  std::vector<std::string> quality_names;
  std::vector<double> time;                  // strictly increasing
  std::vector<std::vector<double>> process;  // [D][rows]
  std::vector<std::vector<double>> quality;  // [K][rows]
  std::size_t dropped_rows = 0;              // rows with missing values removed at load

  std::size_t rows() const noexcept { return time.size(); }
};

// Rows containing an empty, NA, NaN or null field are dropped and counted.
RawSeries load_csv(const std::filesystem::path& path, const Schema& schema = {});

/// Lagged model inputs: row i is [x_1(t) .. x_1(t-L+1), ..., x_D(t) .. x_D(t-L+1)].
struct LaggedDataset {
  Tensor x;                             // N x (D * L)
  Tensor y;                             // N x K
  std::vector<std::size_t> source_row;  // raw row index of time t for each sample
  std::size_t lags = 1;

  std::size_t size() const noexcept { return source_row.size(); }
  std::size_t features() const noexcept { return x.cols(); }
  std::size_t objectives() const noexcept { return y.cols(); }
  LaggedDataset slice(std::size_t begin, std::size_t end) const;
  // Dataset with only target column k.
  LaggedDataset objective(std::size_t k) const;
};

inline constexpr std::size_t kDefaultLags = 10;

LaggedDataset lag_embed(const RawSeries& raw, std::size_t lags = kDefaultLags);
// Process columns are already the model inputs; no embedding.
LaggedDataset without_embedding(const RawSeries& raw);

struct SplitSpec {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

struct Splits {
  LaggedDataset train;
  LaggedDataset validation;
  LaggedDataset test;
};

// Contiguous train -> validation -> test slices of sizes floor(f_train N),
// floor(f_val N) and the remainder.
Splits split(const LaggedDataset& ds, const SplitSpec& spec = {});

/// Per-column standardization fitted on one partition.
class Normalizer {
 public:
  Normalizer() = default;
  static Normalizer fit(const Tensor& columns);

  Tensor transform(const Tensor& columns) const;
  Tensor inverse_transform(const Tensor& columns) const;
  // Maps a single column j back to physical units.
  double inverse(std::size_t column, double value) const { return value * stddev_[column] + mean_[column]; }

  const std::vector<double>& mean() const noexcept { return mean_; }
  // Zero-variance columns report 1.
  const std::vector<double>& stddev() const noexcept { return stddev_; }

 private:
  std::vector<double> mean_;
  std::vector<double> stddev_;
};

struct SynthOptions {
  double persistence = 0.9;  // AR(1) coefficient of the process channels
  double shared_gain = 1.2;  // weight of the latent term common to y1 and y2
  double opposing_gain = 1.0;  // +/- weight of the term that pushes y1 and y2 apart
  double specific_gain = 0.6;  // weight of each target's own term
  double noise_y1 = 0.1;  // y1 is the clean target, y2 the noisy one
  double noise_y2 = 0.5;
};

// Synthetic SRU-like series x1..x5, y1, y2 (needs rows >= 20): smooth
// autocorrelated inputs and two noisy targets built from lagged inputs through
// a shared latent term and an opposing term, so that y1 and y2 are negatively
// correlated. Targets are scaled to concentration-like magnitudes.
RawSeries synth_sru(std::uint64_t seed, std::size_t rows, const SynthOptions& options = {});

double pearson(std::span<const double> a, std::span<const double> b);

// FNV-1a over the bit patterns of every value, for run manifests.
std::uint64_t checksum(const RawSeries& raw);

}  // namespace pmoe::data
