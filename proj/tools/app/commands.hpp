#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace pmoe::app {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  // solver-bench violations, ablation with no successful cell
  kConfigError = 2,
  kDataError = 3,
  kDivergence = 4,
};

// Each command reports progress on out and problems on err, and writes files
// only below the configured output directory (export-plots: <run_dir>/plots).
int cmd_train(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_eval(const std::filesystem::path& config, const std::filesystem::path& checkpoint, std::ostream& out,
             std::ostream& err);
int cmd_ablate(const std::filesystem::path& config, const std::filesystem::path& grid, std::ostream& out,
               std::ostream& err);
int cmd_solver_bench(long k, long instances, std::uint64_t seed, std::ostream& out, std::ostream& err);
int cmd_export_plots(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err);

}  // namespace pmoe::app
