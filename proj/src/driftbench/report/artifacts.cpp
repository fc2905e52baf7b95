#include "driftbench/report/artifacts.h"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"

namespace driftbench::report {

using nlohmann::json;

RunPaths RunPaths::in(const std::filesystem::path& dir) {
  RunPaths p;
  p.root = dir;
  p.config = dir / "config.json";
  p.ledger = dir / "ledger.jsonl";
  p.checkpoints = dir / "checkpoints";
  p.matrix_json = dir / "matrix.json";
  p.matrix_tsv = dir / "matrix.tsv";
  p.transfer_json = dir / "transfer_report.json";
  p.transfer_txt = dir / "transfer_report.txt";
  p.hellaswag_json = dir / "hellaswag.json";
  p.emissions_jsonl = dir / "emissions.jsonl";
  p.grad_ortho_json = dir / "grad_ortho.json";
  return p;
}

namespace {

std::string format_cell(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void write_matrix_json(const metrics::PplMatrix& m, const std::string& condition,
                       const std::string& config_hash, const std::filesystem::path& path) {
  json j;
  j["condition"] = condition;
  j["config_hash"] = config_hash;
  j["phases"] = m.phases;
  j["eval_domains"] = m.eval_domains;
  j["cells"] = m.cells;
  write_text_file_atomic(path, j.dump(2) + "\n");
}

MatrixArtifact read_matrix_json(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    fail(Errc::BadMatrix, path.string() + ": " + e.what());
  }
  MatrixArtifact a;
  a.condition = j.value("condition", "");
  a.config_hash = j.value("config_hash", "");
  a.matrix.phases = j.at("phases").get<std::vector<std::string>>();
  a.matrix.eval_domains = j.at("eval_domains").get<std::vector<std::string>>();
  a.matrix.cells = j.at("cells").get<std::vector<std::vector<double>>>();
  a.matrix.validate();
  return a;
}

void write_matrix_tsv(const metrics::PplMatrix& m, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "trained";
  for (const auto& d : m.eval_domains) out << "\t" << d;
  out << "\n";
  for (size_t r = 0; r < m.phases.size(); ++r) {
    out << m.phases[r];
    for (double c : m.cells[r]) out << "\t" << format_cell(c);
    out << "\n";
  }
  write_text_file_atomic(path, out.str());
}

metrics::PplMatrix read_matrix_tsv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::BadMatrix, "empty matrix file");
  metrics::PplMatrix m;
  {
    std::istringstream header(line);
    std::string cell;
    bool first = true;
    while (std::getline(header, cell, '\t')) {
      if (first) {
        require(cell == "trained", Errc::BadMatrix, "header must start with 'trained'");
        first = false;
      } else {
        m.eval_domains.push_back(cell);
      }
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    bool first = true;
    std::vector<double> cells;
    while (std::getline(row, cell, '\t')) {
      if (first) {
        m.phases.push_back(cell);
        first = false;
      } else {
        try {
          cells.push_back(std::stod(cell));
        } catch (const std::exception&) {
          fail(Errc::BadMatrix, "non-numeric cell '" + cell + "'");
        }
      }
    }
    require(cells.size() == m.eval_domains.size(), Errc::BadMatrix, "ragged TSV row");
    m.cells.push_back(std::move(cells));
  }
  m.validate();
  return m;
}

metrics::PplMatrix read_matrix_any(const std::filesystem::path& path) {
  if (path.extension() == ".json") return read_matrix_json(path).matrix;
  return read_matrix_tsv(path);
}

void write_hellaswag_json(const std::vector<std::pair<int, double>>& per_phase,
                          const std::string& config_hash, const std::filesystem::path& path) {
  json j;
  j["config_hash"] = config_hash;
  j["per_phase"] = json::array();
  for (const auto& [phase, acc] : per_phase) {
    j["per_phase"].push_back({{"phase", phase}, {"accuracy", acc}});
  }
  write_text_file_atomic(path, j.dump(2) + "\n");
}

void append_emissions(const std::vector<eval::EmissionRecord>& records,
                      const std::string& config_hash, uint64_t seed,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::app);
  require(out.good(), Errc::Io, "cannot append " + path.string());
  for (const auto& r : records) {
    json j{{"config_hash", config_hash},
           {"seed", seed},
           {"phase", r.phase},
           {"prompt_domain", r.prompt_domain},
           {"prompt_index", r.prompt_index},
           {"prompt_text", r.prompt_text},
           {"output_text", r.output_text},
           {"label", eval::emission_label_name(r.label)},
           {"label_source", r.label_source}};
    out << j.dump() << "\n";
  }
}

std::vector<eval::EmissionRecord> read_emissions(const std::filesystem::path& path,
                                                 std::string* config_hash) {
  std::vector<eval::EmissionRecord> records;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    eval::EmissionRecord r;
    r.phase = j.at("phase").get<int>();
    r.prompt_domain = j.at("prompt_domain").get<std::string>();
    r.prompt_index = j.at("prompt_index").get<int>();
    r.prompt_text = j.at("prompt_text").get<std::string>();
    r.output_text = j.at("output_text").get<std::string>();
    r.label = eval::emission_label_from_name(j.at("label").get<std::string>());
    r.label_source = j.at("label_source").get<std::string>();
    if (config_hash) *config_hash = j.at("config_hash").get<std::string>();
    records.push_back(std::move(r));
  }
  return records;
}

void write_grad_ortho_json(const std::vector<std::pair<int, metrics::GradCosMatrix>>& per_phase,
                           const std::string& config_hash, const std::filesystem::path& path) {
  json j;
  j["config_hash"] = config_hash;
  j["per_phase"] = json::array();
  for (const auto& [phase, g] : per_phase) {
    json entry;
    entry["phase"] = phase;
    entry["domains"] = g.domains();
    entry["samples"] = json::array();
    for (const auto& s : g.samples()) {
      entry["samples"].push_back({{"a", s.domain_a},
                                  {"b", s.domain_b},
                                  {"layer", s.layer},
                                  {"phase", s.phase},
                                  {"abs_cos", s.abs_cos}});
    }
    json pairs = json::array();
    for (const auto& [a, b] : g.pairs_present()) {
      pairs.push_back({{"a", a}, {"b", b}, {"mean_abs_cos", g.mean_abs_cos(a, b)}});
    }
    entry["pair_means"] = std::move(pairs);
    entry["overall_mean_abs_cos"] = g.overall_mean_abs_cos();
    entry["l2_orth_global"] = metrics::l2_orth_fraction(g, metrics::L2Mode::Global);
    entry["l2_orth_per_pair"] = metrics::l2_orth_fraction(g, metrics::L2Mode::PerPair);
    entry["orth_at_0.1_pair"] = metrics::orth_at_threshold(g, 0.1, metrics::OrthLevel::Pair);
    entry["orth_at_0.1_sample"] = metrics::orth_at_threshold(g, 0.1, metrics::OrthLevel::Sample);
    j["per_phase"].push_back(std::move(entry));
  }
  write_text_file_atomic(path, j.dump(2) + "\n");
}

std::vector<std::pair<int, metrics::GradCosMatrix>> read_grad_ortho_json(
    const std::filesystem::path& path) {
  json j = json::parse(read_text_file(path));
  std::vector<std::pair<int, metrics::GradCosMatrix>> out;
  for (const auto& entry : j.at("per_phase")) {
    metrics::GradCosMatrix g(entry.at("domains").get<std::vector<std::string>>());
    for (const auto& s : entry.at("samples")) {
      g.add_sample(metrics::GradCosSample{s.at("a").get<std::string>(),
                                          s.at("b").get<std::string>(), s.at("layer").get<int>(),
                                          s.at("phase").get<int>(),
                                          s.at("abs_cos").get<double>()});
    }
    out.emplace_back(entry.at("phase").get<int>(), std::move(g));
  }
  return out;
}

std::vector<std::pair<int, double>> read_hellaswag_json(const std::filesystem::path& path) {
  json j = json::parse(read_text_file(path));
  std::vector<std::pair<int, double>> out;
  for (const auto& e : j.at("per_phase")) {
    out.emplace_back(e.at("phase").get<int>(), e.at("accuracy").get<double>());
  }
  return out;
}

std::optional<std::string> artifact_config_hash(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  if (path.extension() == ".jsonl") {
    std::string hash;
    read_emissions(path, &hash);
    if (hash.empty()) return std::nullopt;
    return hash;
  }
  try {
    json j = json::parse(read_text_file(path));
    if (j.contains("config_hash")) return j["config_hash"].get<std::string>();
  } catch (const json::exception&) {
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace driftbench::report
