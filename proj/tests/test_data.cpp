#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pmoe/data.hpp"
#include "pmoe/errors.hpp"

using namespace pmoe;
using namespace pmoe::data;
using Catch::Matchers::WithinAbs;

namespace {

class TempFile {
 public:
  explicit TempFile(const std::string& content) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("pmoe_test_data_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv");
    std::ofstream(path_) << content;
  }
  ~TempFile() { std::filesystem::remove(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string sru_csv(std::size_t rows, std::size_t null_row = SIZE_MAX) {
  std::string s = "x1,x2,x3,x4,x5,y1,y2\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (int c = 0; c < 7; ++c) {
      if (c) s += ',';
      if (!(r == null_row && c == 3)) s += std::to_string(r * 10 + c) + ".5";
    }
    s += '\n';
  }
  return s;
}

RawSeries one_channel(std::vector<double> x) {
  RawSeries raw;
  raw.process_names = {"x1"};
  raw.quality_names = {"y1"};
  for (std::size_t i = 0; i < x.size(); ++i) raw.time.push_back(double(i));
  raw.quality = {std::vector<double>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) raw.quality[0][i] = 100.0 + double(i);
  raw.process = {std::move(x)};
  return raw;
}

LaggedDataset indexed(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = double(i);
  return lag_embed(one_channel(x), 1);
}

}  // namespace

TEST_CASE("load_csv reads a clean SRU file", "[data]") {
  TempFile f(sru_csv(10));
  const RawSeries raw = load_csv(f.path());
  CHECK(raw.rows() == 10);
  CHECK(raw.dropped_rows == 0);
  CHECK(raw.process.size() == 5);
  CHECK(raw.quality.size() == 2);
  CHECK(raw.process[1][3] == 31.5);
  CHECK(raw.quality[1][9] == 96.5);
  CHECK(raw.quality_names == std::vector<std::string>{"y1", "y2"});
}

TEST_CASE("load_csv drops rows with missing values", "[data]") {
  TempFile f(sru_csv(10, 4));
  const RawSeries raw = load_csv(f.path());
  CHECK(raw.rows() == 9);
  CHECK(raw.dropped_rows == 1);
  CHECK(raw.process[0][4] == 50.5);

  TempFile tokens("x1,x2,x3,x4,x5,y1,y2\n1,2,3,4,5,6,7\n1,2,NA,4,5,6,7\n1,2,3,nan,5,6,7\n1,2,3,4,null,6,7\n2,2,3,4,5,6,7\n");
  const RawSeries t = load_csv(tokens.path());
  CHECK(t.rows() == 2);
  CHECK(t.dropped_rows == 3);
}

TEST_CASE("load_csv reports schema and row errors", "[data]") {
  TempFile missing("x1,x2,x3,x4,x5,y1\n1,2,3,4,5,6\n");
  try {
    load_csv(missing.path());
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(e.column() == "y2");
  }

  TempFile bad("x1,x2,x3,x4,x5,y1,y2\n1,2,3,4,5,6,7\n1,2,3,oops,5,6,7\n");
  try {
    load_csv(bad.path());
    FAIL("expected a row error");
  } catch (const RowError& e) {
    CHECK(e.line() == 3);
  }

  TempFile ragged("x1,x2,x3,x4,x5,y1,y2\n1,2,3\n");
  CHECK_THROWS_AS(load_csv(ragged.path()), RowError);
  CHECK_THROWS_AS(load_csv("/nonexistent/pmoe.csv"), DataError);
}

TEST_CASE("load_csv honours a custom schema with a time column", "[data]") {
  Schema schema;
  schema.process = {"feed"};
  schema.quality = {"purity"};
  schema.time_column = "t";
  schema.delimiter = ';';
  TempFile f("purity;t;feed\n1;0.5;10\n2;1.5;20\n3;2.5;30\n");
  const RawSeries raw = load_csv(f.path(), schema);
  CHECK(raw.time == std::vector<double>{0.5, 1.5, 2.5});
  CHECK(raw.process[0] == std::vector<double>{10, 20, 30});
  CHECK(raw.quality[0] == std::vector<double>{1, 2, 3});

  TempFile back("purity;t;feed\n1;0.5;10\n2;0.5;20\n");
  CHECK_THROWS_AS(load_csv(back.path(), schema), RowError);
}

TEST_CASE("lag_embed examples", "[data]") {
  const LaggedDataset ds = lag_embed(one_channel({1, 2, 3, 4}), 3);
  REQUIRE(ds.size() == 2);
  CHECK(ds.x == Tensor::matrix(2, 3, {3, 2, 1, 4, 3, 2}));
  CHECK(ds.source_row == std::vector<std::size_t>{2, 3});
  CHECK(ds.y(0, 0) == 102.0);
  CHECK(ds.y(1, 0) == 103.0);

  const RawSeries sru = synth_sru(3, 40);
  const LaggedDataset full = lag_embed(sru);
  CHECK(full.features() == 50);
  CHECK(full.size() == 31);

  CHECK(lag_embed(one_channel({1, 2, 3}), 3).size() == 1);
  CHECK_THROWS_AS(lag_embed(one_channel({1, 2}), 3), DomainError);
}

TEST_CASE("lag_embed reproduces raw values exactly", "[data][property]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RawSeries raw = synth_sru(seed, 60);
    const std::size_t lags = 1 + seed * 2;
    const LaggedDataset ds = lag_embed(raw, lags);
    CHECK(ds.size() == raw.rows() - (lags - 1));
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const std::size_t t = ds.source_row[i];
      for (std::size_t d = 0; d < 5; ++d)
        for (std::size_t z = 0; z < lags; ++z) CHECK(ds.x(i, d * lags + z) == raw.process[d][t - z]);
      for (std::size_t k = 0; k < 2; ++k) CHECK(ds.y(i, k) == raw.quality[k][t]);
    }
  }
}

TEST_CASE("without_embedding keeps the process columns as inputs", "[data]") {
  const RawSeries raw = synth_sru(1, 25);
  const LaggedDataset ds = without_embedding(raw);
  CHECK(ds.size() == 25);
  CHECK(ds.features() == 5);
  CHECK(ds.x(7, 2) == raw.process[2][7]);
}

TEST_CASE("split examples", "[data]") {
  auto sizes = [](std::size_t n) {
    const Splits s = split(indexed(n));
    return std::vector<std::size_t>{s.train.size(), s.validation.size(), s.test.size()};
  };
  CHECK(sizes(10000) == std::vector<std::size_t>{6000, 2000, 2000});
  CHECK(sizes(10) == std::vector<std::size_t>{6, 2, 2});
  CHECK(sizes(11) == std::vector<std::size_t>{6, 2, 3});
  CHECK_THROWS_AS(split(indexed(4)), DomainError);
}

TEST_CASE("splits are contiguous, disjoint and exhaustive", "[data][property]") {
  for (std::size_t n : {5u, 17u, 100u, 9991u}) {
    const LaggedDataset ds = indexed(n);
    const Splits s = split(ds);
    std::vector<std::size_t> joined;
    for (const LaggedDataset* part : {&s.train, &s.validation, &s.test})
      joined.insert(joined.end(), part->source_row.begin(), part->source_row.end());
    CHECK(joined == ds.source_row);
    for (std::size_t i = 0; i < s.validation.size(); ++i) CHECK(s.validation.x(i, 0) == double(s.train.size() + i));
  }
}

TEST_CASE("normalizer fitted on train standardizes train features", "[data][property]") {
  const LaggedDataset ds = lag_embed(synth_sru(11, 500));
  const Splits s = split(ds);
  const Normalizer norm = Normalizer::fit(s.train.x);
  const Tensor z = norm.transform(s.train.x);
  for (std::size_t c = 0; c < z.cols(); ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < z.rows(); ++r) mean += z(r, c);
    mean /= double(z.rows());
    for (std::size_t r = 0; r < z.rows(); ++r) sq += (z(r, c) - mean) * (z(r, c) - mean);
    CHECK(std::abs(mean) <= 1e-9);
    CHECK_THAT(std::sqrt(sq / double(z.rows())), WithinAbs(1.0, 1e-9));
  }
  for (const Tensor* part : {&s.validation.x, &s.test.x}) {
    const Tensor back = norm.inverse_transform(norm.transform(*part));
    for (std::size_t i = 0; i < back.size(); ++i) CHECK_THAT(back[i], WithinAbs((*part)[i], 1e-10));
  }
}

TEST_CASE("zero-variance columns map to zero", "[data]") {
  const Tensor cols = Tensor::matrix(3, 2, {5, 1, 5, 2, 5, 3});
  const Normalizer norm = Normalizer::fit(cols);
  CHECK(norm.stddev()[0] == 1.0);
  const Tensor z = norm.transform(cols);
  for (std::size_t r = 0; r < 3; ++r) CHECK(z(r, 0) == 0.0);
  CHECK(norm.inverse(1, z(2, 1)) == Catch::Approx(3.0));
  CHECK_THROWS_AS(norm.transform(Tensor::matrix(1, 3, {1, 2, 3})), DimensionError);
}

TEST_CASE("synth_sru is deterministic and anti-correlated", "[data]") {
  const RawSeries a = synth_sru(42, 300), b = synth_sru(42, 300), c = synth_sru(43, 300);
  CHECK(a.process == b.process);
  CHECK(a.quality == b.quality);
  CHECK(checksum(a) == checksum(b));
  CHECK(checksum(a) != checksum(c));

  const RawSeries small = synth_sru(1, 20);
  CHECK(small.rows() == 20);
  CHECK_THROWS_AS(synth_sru(1, 19), DomainError);

  for (std::uint64_t seed : {1u, 7u, 19u}) {
    const RawSeries big = synth_sru(seed, 10000);
    CHECK(pearson(big.quality[0], big.quality[1]) < 0.0);
  }
}

TEST_CASE("pearson examples", "[data]") {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1};
  CHECK_THAT(pearson(a, b), WithinAbs(1.0, 1e-15));
  CHECK_THAT(pearson(a, c), WithinAbs(-1.0, 1e-15));
}
