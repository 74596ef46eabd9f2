#include <cmath>
#include <cstring>

#include "pmoe/data.hpp"
#include "pmoe/errors.hpp"

namespace pmoe::data {

LaggedDataset LaggedDataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw DimensionError("dataset slice out of range");
  const std::size_t n = end - begin;
  const std::size_t fx = x.cols(), fy = y.cols();
  LaggedDataset out;
  out.lags = lags;
  out.x = Tensor(Shape{n, fx},
                 std::vector<double>(x.values().begin() + static_cast<std::ptrdiff_t>(begin * fx),
                                     x.values().begin() + static_cast<std::ptrdiff_t>(end * fx)));
  out.y = Tensor(Shape{n, fy},
                 std::vector<double>(y.values().begin() + static_cast<std::ptrdiff_t>(begin * fy),
                                     y.values().begin() + static_cast<std::ptrdiff_t>(end * fy)));
  out.source_row.assign(source_row.begin() + static_cast<std::ptrdiff_t>(begin),
                        source_row.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

LaggedDataset LaggedDataset::objective(std::size_t k) const {
  if (k >= objectives()) throw DimensionError("objective index out of range");
  LaggedDataset out = *this;
  out.y = Tensor(Shape{size(), 1});
  for (std::size_t i = 0; i < size(); ++i) out.y[i] = y(i, k);
  return out;
}

LaggedDataset lag_embed(const RawSeries& raw, std::size_t lags) {
  if (lags < 1) throw DomainError("lag_embed: lag count must be >= 1");
  if (raw.rows() < lags) {
    throw DomainError("lag_embed: " + std::to_string(raw.rows()) + " rows is fewer than " + std::to_string(lags) +
                      " lags");
  }
  const std::size_t d_count = raw.process.size();
  const std::size_t k_count = raw.quality.size();
  const std::size_t n = raw.rows() - (lags - 1);
  LaggedDataset ds;
  ds.lags = lags;
  ds.x = Tensor(Shape{n, d_count * lags});
  ds.y = Tensor(Shape{n, k_count});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = i + lags - 1;
    for (std::size_t d = 0; d < d_count; ++d)
      for (std::size_t z = 0; z < lags; ++z) ds.x(i, d * lags + z) = raw.process[d][t - z];
    for (std::size_t k = 0; k < k_count; ++k) ds.y(i, k) = raw.quality[k][t];
    ds.source_row.push_back(t);
  }
  return ds;
}

LaggedDataset without_embedding(const RawSeries& raw) { return lag_embed(raw, 1); }

Splits split(const LaggedDataset& ds, const SplitSpec& spec) {
  if (spec.train < 0 || spec.validation < 0 || spec.test < 0 ||
      std::abs(spec.train + spec.validation + spec.test - 1.0) > 1e-12) {
    throw DomainError("split fractions must be non-negative and sum to 1");
  }
  const std::size_t n = ds.size();
  if (n < 5) throw DomainError("split needs at least 5 samples, got " + std::to_string(n));
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(spec.validation * static_cast<double>(n)));
  return Splits{ds.slice(0, n_train), ds.slice(n_train, n_train + n_val), ds.slice(n_train + n_val, n)};
}

Normalizer Normalizer::fit(const Tensor& columns) {
  if (columns.rows() == 0) throw DomainError("Normalizer::fit on an empty partition");
  const std::size_t n = columns.rows(), f = columns.cols();
  Normalizer out;
  out.mean_.assign(f, 0.0);
  out.stddev_.assign(f, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) out.mean_[j] += columns(i, j);
  for (double& m : out.mean_) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) {
      const double d = columns(i, j) - out.mean_[j];
      out.stddev_[j] += d * d;
    }
  for (double& s : out.stddev_) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;
  }
  return out;
}

Tensor Normalizer::transform(const Tensor& columns) const {
  if (columns.cols() != mean_.size()) throw DimensionError("Normalizer: column count mismatch");
  Tensor out = columns;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = (out(i, j) - mean_[j]) / stddev_[j];
  return out;
}

Tensor Normalizer::inverse_transform(const Tensor& columns) const {
  if (columns.cols() != mean_.size()) throw DimensionError("Normalizer: column count mismatch");
  Tensor out = columns;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = out(i, j) * stddev_[j] + mean_[j];
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DimensionError("pearson: need two equal-length series");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::uint64_t checksum(const RawSeries& raw) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (double t : raw.time) feed(t);
  for (const auto& col : raw.process)
    for (double v : col) feed(v);
  for (const auto& col : raw.quality)
    for (double v : col) feed(v);
  return h;
}

}  // namespace pmoe::data
