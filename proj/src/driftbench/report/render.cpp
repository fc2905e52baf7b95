#include "driftbench/report/render.h"

#include <cmath>
#include <cstdio>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"
#include "driftbench/report/artifacts.h"
#include "driftbench/report/run_config.h"

namespace driftbench::report {

using nlohmann::json;

std::string format_ppl(double v) {
  char buf[64];
  if (v >= 10.0) {
    std::snprintf(buf, sizeof(buf), "%.2f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.3g", v);
  }
  return buf;
}

std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

namespace {

void render_matrix_rows(std::ostringstream& out, const metrics::PplMatrix& m) {
  out << "trained";
  for (const auto& d : m.eval_domains) out << "\t" << d;
  out << "\n";
  for (size_t r = 0; r < m.phases.size(); ++r) {
    out << "P" << (r + 1) << " " << m.phases[r];
    for (double c : m.cells[r]) out << "\t" << format_ppl(c);
    out << "\n";
  }
}

void render_bwt_d_row(std::ostringstream& out, const metrics::PplMatrix& m,
                      const metrics::TransferReport& rep) {
  out << "bwt_d";
  for (const auto& d : m.eval_domains) {
    auto it = rep.bwt_d.find(d);
    out << "\t" << (it == rep.bwt_d.end() ? std::string("---") : format_metric(it->second));
  }
  out << "\n";
}

}  // namespace

std::string render_fused_table(const metrics::PplMatrix& m, const std::string& condition) {
  const auto rep = metrics::build_transfer_report(m);
  std::ostringstream out;
  out << "== " << condition << " ==\n";
  render_matrix_rows(out, m);
  render_bwt_d_row(out, m, rep);
  out << "\n";
  out << "BWT / FM\t" << format_metric(rep.bwt) << " / " << format_metric(rep.fm) << "\n";
  out << "fwt_d";
  bool any = false;
  for (const auto& d : m.eval_domains) {
    auto it = rep.fwt_d.find(d);
    if (it == rep.fwt_d.end()) continue;
    out << "\t" << d << " " << format_metric(it->second);
    any = true;
  }
  if (!any) out << "\t---";
  out << "\n";
  out << "domains\t" << rep.domain_set_note << "\n";
  return out.str();
}

std::string render_transfer_report(const metrics::PplMatrix& m) {
  return render_fused_table(m, "matrix");
}

void write_transfer_report(const metrics::PplMatrix& m, const std::string& condition,
                           const std::string& config_hash,
                           const std::filesystem::path& json_path,
                           const std::filesystem::path& txt_path) {
  const auto rep = metrics::build_transfer_report(m);
  json j;
  j["condition"] = condition;
  j["config_hash"] = config_hash;
  j["bwt"] = rep.bwt;
  j["fm"] = rep.fm;
  j["bwt_d"] = rep.bwt_d;
  j["fwt_d"] = rep.fwt_d;
  j["domain_set_note"] = rep.domain_set_note;
  write_text_file_atomic(json_path, j.dump(2) + "\n");
  write_text_file_atomic(txt_path, render_fused_table(m, condition));
}

namespace {

struct RunArtifacts {
  RunPaths paths;
  std::string condition;
  std::string config_hash;
  std::optional<MatrixArtifact> matrix;
  std::optional<json> hellaswag;
  std::vector<eval::EmissionRecord> emissions;
  std::optional<json> grad;
};

RunArtifacts load_run(const std::filesystem::path& run_dir, bool force) {
  RunArtifacts a;
  a.paths = RunPaths::in(run_dir);
  require(std::filesystem::exists(a.paths.config), Errc::Io,
          "no config.json under " + run_dir.string());
  const auto cfg = load_run_config(a.paths.config);
  a.condition = cfg.condition_name;
  a.config_hash = cfg.hash();

  auto check_hash = [&](const std::filesystem::path& p) {
    const auto h = artifact_config_hash(p);
    if (h && *h != a.config_hash && !force) {
      fail(Errc::CorruptRun, p.filename().string() + " carries config hash " + *h +
                                 " but the run config hashes to " + a.config_hash +
                                 " (use --force to merge anyway)");
    }
  };

  if (std::filesystem::exists(a.paths.matrix_json)) {
    check_hash(a.paths.matrix_json);
    a.matrix = read_matrix_json(a.paths.matrix_json);
  }
  if (std::filesystem::exists(a.paths.hellaswag_json)) {
    check_hash(a.paths.hellaswag_json);
    a.hellaswag = json::parse(read_text_file(a.paths.hellaswag_json));
  }
  if (std::filesystem::exists(a.paths.emissions_jsonl)) {
    check_hash(a.paths.emissions_jsonl);
    a.emissions = read_emissions(a.paths.emissions_jsonl);
  }
  if (std::filesystem::exists(a.paths.grad_ortho_json)) {
    check_hash(a.paths.grad_ortho_json);
    a.grad = json::parse(read_text_file(a.paths.grad_ortho_json));
  }
  return a;
}

void append_condition_report(std::ostringstream& out, const RunArtifacts& a) {
  if (a.matrix) {
    out << render_fused_table(a.matrix->matrix, a.condition);
  } else {
    out << "== " << a.condition << " ==\nmatrix: missing\n";
  }
  if (a.hellaswag) {
    out << "hellaswag";
    for (const auto& e : a.hellaswag->at("per_phase")) {
      out << "\tP" << e.at("phase").get<int>() << " "
          << format_metric(e.at("accuracy").get<double>());
    }
    out << "\n";
  } else {
    out << "hellaswag: not run\n";
  }
  if (!a.emissions.empty()) {
    std::map<int, std::map<std::string, int>> by_phase;
    for (const auto& r : a.emissions) {
      ++by_phase[r.phase][eval::emission_label_name(r.label)];
    }
    for (const auto& [phase, counts] : by_phase) {
      out << "emissions P" << phase;
      for (const auto& [label, n] : counts) out << "\t" << label << " x" << n;
      out << "\n";
    }
  } else {
    out << "emission probe: not run\n";
  }
  if (a.grad) {
    for (const auto& e : a.grad->at("per_phase")) {
      out << "grad-orth P" << e.at("phase").get<int>() << "\tmean|cos| "
          << format_metric(e.at("overall_mean_abs_cos").get<double>()) << "\tL2-orth "
          << format_metric(e.at("l2_orth_global").get<double>()) << "\torth@0.1(pair) "
          << format_metric(e.at("orth_at_0.1_pair").get<double>()) << "\torth@0.1(sample) "
          << format_metric(e.at("orth_at_0.1_sample").get<double>()) << "\n";
    }
  } else {
    out << "grad-orth probe: not run\n";
  }
  out << "\n";
}

void append_figure_rows(std::ostringstream& bwt, std::ostringstream& hs, std::ostringstream& go,
                        const RunArtifacts& a) {
  if (a.matrix) {
    const auto rep = metrics::build_transfer_report(a.matrix->matrix);
    bwt << a.condition << "\t" << format_metric(rep.bwt) << "\t" << format_metric(rep.fm)
        << "\n";
  }
  if (a.hellaswag) {
    for (const auto& e : a.hellaswag->at("per_phase")) {
      hs << a.condition << "\t" << e.at("phase").get<int>() << "\t"
         << format_metric(e.at("accuracy").get<double>()) << "\n";
    }
  }
  if (a.grad) {
    for (const auto& e : a.grad->at("per_phase")) {
      go << a.condition << "\t" << e.at("phase").get<int>() << "\t"
         << format_metric(e.at("overall_mean_abs_cos").get<double>()) << "\t"
         << format_metric(e.at("l2_orth_global").get<double>()) << "\n";
    }
  }
}

}  // namespace

void render_run_report(const std::filesystem::path& run_dir, const ReportOptions& opts) {
  std::vector<RunArtifacts> runs;
  runs.push_back(load_run(run_dir, opts.force));
  if (!opts.compare_dir.empty()) runs.push_back(load_run(opts.compare_dir, opts.force));

  std::ostringstream report;
  std::ostringstream bwt_bars, hs_phases, go_panels;
  bwt_bars << "condition\tbwt\tfm\n";
  hs_phases << "condition\tphase\taccuracy\n";
  go_panels << "condition\tphase\tmean_abs_cos\tl2_orth_fraction\n";

  for (const auto& a : runs) {
    append_condition_report(report, a);
    append_figure_rows(bwt_bars, hs_phases, go_panels, a);
  }

  if (runs.size() == 2 && runs[0].matrix && runs[1].matrix) {
    const auto r0 = metrics::build_transfer_report(runs[0].matrix->matrix);
    const auto r1 = metrics::build_transfer_report(runs[1].matrix->matrix);
    report << "== comparison ==\n";
    report << "condition\tbwt\tfm\n";
    report << runs[0].condition << "\t" << format_metric(r0.bwt) << "\t" << format_metric(r0.fm)
           << "\n";
    report << runs[1].condition << "\t" << format_metric(r1.bwt) << "\t" << format_metric(r1.fm)
           << "\n";
  }

  write_text_file_atomic(run_dir / "report.txt", report.str());
  write_text_file_atomic(run_dir / "bwt_bars.tsv", bwt_bars.str());
  write_text_file_atomic(run_dir / "hellaswag_phases.tsv", hs_phases.str());
  write_text_file_atomic(run_dir / "grad_orth_panels.tsv", go_panels.str());
}

}  // namespace driftbench::report
