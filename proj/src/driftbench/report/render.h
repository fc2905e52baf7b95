#pragma once

#include <filesystem>
#include <string>

#include "driftbench/metrics/transfer.h"

namespace driftbench::report {

/// PPL table style: two decimals at >= 10, three significant digits below.
std::string format_ppl(double v);
/// Scalar metrics render at six decimals.
std::string format_metric(double v);

/// One condition's fused block: the PPL matrix, the per-domain bwt_d row
/// ("---" where undefined), and the scalar metric block.
std::string render_fused_table(const metrics::PplMatrix& m, const std::string& condition);

/// Renders the transfer report alone (cmd-metrics output).
std::string render_transfer_report(const metrics::PplMatrix& m);

/// Writes the transfer report as both structured JSON and the rendered fused
/// table, config hash embedded.
void write_transfer_report(const metrics::PplMatrix& m, const std::string& condition,
                           const std::string& config_hash,
                           const std::filesystem::path& json_path,
                           const std::filesystem::path& txt_path);

struct ReportOptions {
  bool force = false;  // skip the config-hash consistency check
  std::filesystem::path compare_dir;  // optional second run for side-by-side
};

/// Builds report.txt plus the three figure-data files (bwt_bars.tsv,
/// hellaswag_phases.tsv, grad_orth_panels.tsv) from a run directory's
/// artifacts. Missing artifacts are flagged in the report rather than fatal;
/// mismatched config hashes abort unless forced.
void render_run_report(const std::filesystem::path& run_dir, const ReportOptions& opts);

}  // namespace driftbench::report
