#include "pmoe/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "pmoe/data.hpp"

namespace pmoe::report {

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

std::string metrics_to_tsv(const train::MetricsReport& report) {
  const std::size_t K = report.epochs.empty() ? 0 : report.epochs.front().val_mse.size();
  std::ostringstream out;
  out << "epoch\tselection_loss";
  for (const char* name : {"train_loss", "val_mse", "val_r2", "weight"})
    for (std::size_t k = 1; k <= K; ++k) out << '\t' << name << '_' << k;
  out << '\n';
  for (const train::EpochRecord& e : report.epochs) {
    out << e.epoch << '\t' << format_double(e.selection_loss);
    for (const auto* col : {&e.train_loss, &e.val_mse, &e.val_r2, &e.mean_weights})
      for (double v : *col) out << '\t' << format_double(v);
    out << '\n';
  }
  return out.str();
}

std::string trajectory_to_tsv(const train::WeightTrajectory& trajectory) {
  const std::size_t K = trajectory.empty() ? 0 : trajectory.front().weights.size();
  std::ostringstream out;
  out << "step\tepoch\tresidual\tfw_iterations";
  for (std::size_t k = 1; k <= K; ++k) out << "\tw_" << k;
  for (std::size_t k = 1; k <= K; ++k) out << "\tloss_" << k;
  out << '\n';
  for (const train::TrajectoryPoint& p : trajectory) {
    out << p.step << '\t' << p.epoch << '\t' << format_double(p.residual) << '\t' << p.fw_iterations;
    for (double w : p.weights) out << '\t' << format_double(w);
    for (double l : p.losses) out << '\t' << format_double(l);
    out << '\n';
  }
  return out.str();
}

std::string test_metrics_to_tsv(const std::vector<train::ObjectiveMetrics>& physical,
                                const std::vector<train::ObjectiveMetrics>& scaled) {
  auto r2 = [](const train::ObjectiveMetrics& m) { return m.r2 ? format_double(*m.r2) : std::string("NA"); };
  std::ostringstream out;
  out << "objective\trmse\tmae\tr2\trmse_scaled\tmae_scaled\tr2_scaled\n";
  for (std::size_t k = 0; k < physical.size(); ++k) {
    out << k + 1 << '\t' << format_double(physical[k].rmse) << '\t' << format_double(physical[k].mae) << '\t'
        << r2(physical[k]);
    if (k < scaled.size())
      out << '\t' << format_double(scaled[k].rmse) << '\t' << format_double(scaled[k].mae) << '\t' << r2(scaled[k]);
    out << '\n';
  }
  return out.str();
}

std::size_t Table::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw data::DataError("table has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

}  // namespace

Table parse_tsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Table table;
  if (!std::getline(in, line) || line.empty()) throw data::DataError("table is empty");
  table.columns = split_tabs(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_tabs(line);
    if (cells.size() != table.columns.size())
      throw data::RowError(line_no, "expected " + std::to_string(table.columns.size()) + " cells");
    std::vector<double> row;
    for (const std::string& c : cells) {
      if (c == "NA") {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      auto [end, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || end != c.data() + c.size()) throw data::RowError(line_no, "bad number '" + c + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<LongRow> to_long(const Table& table, const std::string& key) {
  const std::size_t key_col = table.column(key);
  std::vector<LongRow> out;
  for (const auto& row : table.rows)
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      if (c != key_col) out.push_back({row[key_col], table.columns[c], row[c]});
  return out;
}

Histogram histogram(const std::vector<double>& values, std::size_t bins) {
  Histogram h;
  if (values.empty() || bins == 0) return h;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    h.lower = {lo};
    h.upper = {hi};
    h.counts = {values.size()};
    return h;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (std::size_t b = 0; b < bins; ++b) {
    h.lower.push_back(lo + width * static_cast<double>(b));
    h.upper.push_back(b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1));
  }
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

std::string long_to_tsv(const std::vector<LongRow>& rows) {
  std::ostringstream out;
  out << "step\tseries\tvalue\n";
  for (const LongRow& r : rows) out << format_double(r.step) << '\t' << r.series << '\t' << format_double(r.value) << '\n';
  return out.str();
}

std::string histogram_to_tsv(const Histogram& h) {
  std::ostringstream out;
  out << "bin\tlower\tupper\tcount\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    out << b + 1 << '\t' << format_double(h.lower[b]) << '\t' << format_double(h.upper[b]) << '\t' << h.counts[b]
        << '\n';
  return out.str();
}

}  // namespace pmoe::report
