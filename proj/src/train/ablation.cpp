#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "pmoe/errors.hpp"
#include "pmoe/train.hpp"

namespace pmoe::train {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double AblationRow::combined_mean() const { return mean(r2_mean); }

namespace {

const char* mode_name(WeightMode m) { return m == WeightMode::por ? "por" : "fixed"; }

AblationCell cell(std::size_t n_k, std::size_t n_s, std::size_t n_b, std::size_t n_l, WeightMode mode) {
  AblationCell c{"", n_k, n_s, n_b, n_l, mode};
  std::ostringstream label;
  label << "nk" << n_k << "_ns" << n_s << "_nb" << n_b << "_nl" << n_l << "_" << mode_name(mode);
  c.label = label.str();
  return c;
}

AblationRow run_cell(const AblationCell& c, std::size_t seeds, const TrainConfig& base, const PreparedData& data) {
  AblationRow row;
  row.cell = c;
  TrainConfig config = base;
  config.model.specific_experts = c.n_k;
  config.model.shared_experts = c.n_s;
  config.model.blocks = c.n_b;
  config.model.expert_layers = c.n_l;
  config.weight_mode = c.mode;
  for (std::size_t i = 0; i < seeds; ++i) {
    config.seed = repetition_seed(base.seed, i);
    try {
      TrainResult result = train(config, data);
      std::vector<double> r2;
      for (const ObjectiveMetrics& m : result.metrics.test) r2.push_back(m.r2.value_or(0.0));
      row.r2.push_back(std::move(r2));
    } catch (const std::exception& e) {
      row.errors.push_back("seed " + std::to_string(i) + ": " + e.what());
    }
  }
  if (row.ok()) {
    const std::size_t K = row.r2.front().size();
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<double> column;
      for (const auto& r : row.r2) column.push_back(r[k]);
      row.r2_mean.push_back(mean(column));
      row.r2_std.push_back(sample_stddev(column));
    }
  }
  return row;
}

}  // namespace

AblationSpec AblationSpec::expert_grid(std::size_t max_experts, std::size_t seeds) {
  AblationSpec spec;
  spec.seeds = seeds;
  for (std::size_t n = 1; n <= max_experts; ++n) {
    spec.cells.push_back(cell(n, 0, 2, 3, WeightMode::por));
    spec.cells.push_back(cell(0, n, 2, 3, WeightMode::por));
    spec.cells.push_back(cell(n, n, 2, 3, WeightMode::por));
  }
  return spec;
}

AblationSpec AblationSpec::sensitivity(std::size_t seeds) {
  AblationSpec spec;
  spec.seeds = seeds;
  for (std::size_t n = 1; n <= 5; ++n) spec.cells.push_back(cell(n, n, 2, 3, WeightMode::por));
  for (std::size_t b = 1; b <= 4; ++b) spec.cells.push_back(cell(1, 1, b, 3, WeightMode::por));
  for (std::size_t l = 1; l <= 5; ++l) spec.cells.push_back(cell(1, 1, 2, l, WeightMode::por));
  return spec;
}

AblationSpec AblationSpec::por_vs_fixed(std::size_t max_experts, std::size_t seeds) {
  AblationSpec spec;
  spec.seeds = seeds;
  for (std::size_t n = 1; n <= max_experts; ++n) {
    spec.cells.push_back(cell(n, n, 2, 3, WeightMode::por));
    spec.cells.push_back(cell(n, n, 2, 3, WeightMode::fixed));
  }
  return spec;
}

std::uint64_t repetition_seed(std::uint64_t base_seed, std::size_t repetition) {
  return mix_seed(base_seed + 0x9e3779b97f4a7c15ULL * (repetition + 1));
}

std::vector<AblationRow> run_ablation(const AblationSpec& spec, const TrainConfig& base, const PreparedData& data,
                                      std::size_t workers) {
  if (spec.cells.empty()) throw ConfigError("grid", "no cells");
  if (spec.seeds == 0) throw ConfigError("grid.seeds", "must be >= 1");
  std::vector<AblationRow> rows(spec.cells.size());
  workers = std::clamp<std::size_t>(workers, 1, spec.cells.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < spec.cells.size(); ++i) rows[i] = run_cell(spec.cells[i], spec.seeds, base, data);
    return rows;
  }
  // each cell writes only its own slot, so results do not depend on scheduling
  std::mutex next_mutex;
  std::size_t next = 0;
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(next_mutex);
          if (next >= spec.cells.size()) return;
          i = next++;
        }
        rows[i] = run_cell(spec.cells[i], spec.seeds, base, data);
      }
    });
  pool.clear();
  return rows;
}

std::vector<PorDelta> por_fixed_deltas(const std::vector<AblationRow>& rows) {
  std::map<std::size_t, const AblationRow*> por, fixed;
  for (const AblationRow& r : rows) {
    if (!r.ok() || r.cell.n_k != r.cell.n_s) continue;
    (r.cell.mode == WeightMode::por ? por : fixed)[r.cell.n_k] = &r;
  }
  std::vector<PorDelta> out;
  for (const auto& [n, p] : por) {
    auto f = fixed.find(n);
    if (f == fixed.end()) continue;
    PorDelta d{n, {}};
    for (std::size_t k = 0; k < p->r2_mean.size(); ++k) d.delta.push_back(p->r2_mean[k] - f->second->r2_mean[k]);
    out.push_back(std::move(d));
  }
  return out;
}

std::string ablation_to_tsv(const std::vector<AblationRow>& rows) {
  std::size_t K = 0;
  for (const AblationRow& r : rows) K = std::max(K, r.r2_mean.size());
  std::ostringstream out;
  out.precision(17);
  out << "label\tn_k\tn_s\tn_b\tn_l\tmode\truns\tfailures";
  for (std::size_t k = 1; k <= K; ++k) out << "\tr2_mean_" << k << "\tr2_std_" << k;
  out << '\n';
  for (const AblationRow& r : rows) {
    out << r.cell.label << '\t' << r.cell.n_k << '\t' << r.cell.n_s << '\t' << r.cell.n_b << '\t' << r.cell.n_l
        << '\t' << mode_name(r.cell.mode) << '\t' << r.r2.size() << '\t' << r.errors.size();
    for (std::size_t k = 0; k < K; ++k) {
      if (k < r.r2_mean.size())
        out << '\t' << r.r2_mean[k] << '\t' << r.r2_std[k];
      else
        out << "\tNA\tNA";
    }
    out << '\n';
  }
  return out.str();
}

SeesawReport compare_seesaw(const data::Splits& splits, const TrainConfig& base) {
  const std::size_t K = splits.train.objectives();
  SeesawReport report;
  auto r2_of = [](const TrainResult& r) {
    std::vector<double> out;
    for (const ObjectiveMetrics& m : r.metrics.test) out.push_back(m.r2.value_or(0.0));
    return out;
  };
  const PreparedData joint = prepare(splits);
  for (std::size_t k = 0; k < K; ++k) {
    TrainConfig single = base;
    single.model.objectives = 1;
    single.weight_mode = WeightMode::fixed;
    single.fixed_weights.clear();
    report.single_r2.push_back(r2_of(train(single, prepare(select_objective(splits, k)))).front());
  }
  TrainConfig fixed = base;
  fixed.model.objectives = K;
  fixed.weight_mode = WeightMode::fixed;
  fixed.fixed_weights.clear();
  report.fixed_r2 = r2_of(train(fixed, joint));
  TrainConfig por = fixed;
  por.weight_mode = WeightMode::por;
  report.por_r2 = r2_of(train(por, joint));
  for (std::size_t k = 0; k < K; ++k) {
    report.negative_transfer.push_back(report.fixed_r2[k] - report.single_r2[k]);
    report.por_gain.push_back(report.por_r2[k] - report.fixed_r2[k]);
  }
  return report;
}

}  // namespace pmoe::train
