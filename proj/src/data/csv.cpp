#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pmoe/data.hpp"

namespace pmoe::data {

namespace {

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delimiter)) fields.push_back(field);
  if (!line.empty() && line.back() == delimiter) fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  auto blank = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), blank));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), blank).base(), s.end());
  return s;
}

bool is_null(std::string field) {
  std::transform(field.begin(), field.end(), field.begin(), [](unsigned char c) { return std::tolower(c); });
  return field.empty() || field == "na" || field == "nan" || field == "null" || field == "n/a" || field == "none";
}

std::optional<double> parse_number(const std::string& field) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

RawSeries load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_fields(line, schema.delimiter);
  for (std::string& h : header) h = trim(h);

  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(name);
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> process_cols, quality_cols;
  for (const std::string& name : schema.process) process_cols.push_back(column_of(name));
  for (const std::string& name : schema.quality) quality_cols.push_back(column_of(name));
  const std::optional<std::size_t> time_col =
      schema.time_column ? std::optional<std::size_t>(column_of(*schema.time_column)) : std::nullopt;

  RawSeries raw;
  raw.process_names = schema.process;
  raw.quality_names = schema.quality;
  raw.process.resize(schema.process.size());
  raw.quality.resize(schema.quality.size());

  std::size_t line_no = 1;
  std::size_t data_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_fields(line, schema.delimiter);
    if (fields.size() != header.size()) {
      throw RowError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
    }
    for (std::string& f : fields) f = trim(f);

    auto wanted = process_cols;
    wanted.insert(wanted.end(), quality_cols.begin(), quality_cols.end());
    if (time_col) wanted.push_back(*time_col);
    if (std::any_of(wanted.begin(), wanted.end(), [&](std::size_t c) { return is_null(fields[c]); })) {
      ++raw.dropped_rows;
      ++data_rows;
      continue;
    }
    auto number = [&](std::size_t c) {
      const auto v = parse_number(fields[c]);
      if (!v) throw RowError(line_no, "cannot parse \"" + fields[c] + "\" in column " + header[c]);
      return *v;
    };
    const double t = time_col ? number(*time_col) : static_cast<double>(data_rows);
    if (!raw.time.empty() && !(t > raw.time.back())) throw RowError(line_no, "time index is not strictly increasing");
    raw.time.push_back(t);
    for (std::size_t d = 0; d < process_cols.size(); ++d) raw.process[d].push_back(number(process_cols[d]));
    for (std::size_t k = 0; k < quality_cols.size(); ++k) raw.quality[k].push_back(number(quality_cols[k]));
    ++data_rows;
  }
  return raw;
}

}  // namespace pmoe::data
