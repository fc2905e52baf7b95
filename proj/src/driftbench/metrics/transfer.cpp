#include "driftbench/metrics/transfer.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "driftbench/core/error.h"

namespace driftbench::metrics {

int PplMatrix::tau(const std::string& domain) const {
  for (size_t i = 0; i < phases.size(); ++i) {
    if (phases[i] == domain) return static_cast<int>(i) + 1;
  }
  return 0;
}

int PplMatrix::domain_col(const std::string& domain) const {
  for (size_t i = 0; i < eval_domains.size(); ++i) {
    if (eval_domains[i] == domain) return static_cast<int>(i);
  }
  return -1;
}

double PplMatrix::at(int phase_1based, const std::string& domain) const {
  const int col = domain_col(domain);
  require(col >= 0, Errc::BadMatrix, "unknown eval domain " + domain);
  require(phase_1based >= 1 && phase_1based <= num_phases(), Errc::BadMatrix,
          "phase index out of range");
  return cells[static_cast<size_t>(phase_1based - 1)][static_cast<size_t>(col)];
}

void PplMatrix::validate() const {
  require(!phases.empty(), Errc::BadMatrix, "no phases");
  require(cells.size() == phases.size(), Errc::BadMatrix, "row count != phase count");
  std::set<std::string> seen;
  for (const auto& d : phases) {
    require(seen.insert(d).second, Errc::BadMatrix, "duplicate trained domain " + d);
    require(domain_col(d) >= 0, Errc::BadMatrix, "trained domain missing from eval set: " + d);
  }
  for (const auto& row : cells) {
    require(row.size() == eval_domains.size(), Errc::BadMatrix, "ragged matrix row");
    for (double c : row) require(c > 0.0, Errc::BadMatrix, "non-positive PPL cell");
  }
}

double compute_bwt_d(const PplMatrix& m, const std::string& domain) {
  const int t = m.tau(domain);
  require(t >= 1, Errc::BadMatrix, domain + " was never trained");
  const int last = m.num_phases();
  require(t < last, Errc::NoLaterPhase, domain + " trained at the final phase");
  const double just_trained = m.at(t, domain);
  const double final_ppl = m.at(last, domain);
  return -(final_ppl - just_trained) / just_trained;
}

double compute_bwt(const PplMatrix& m) {
  double sum = 0.0;
  int n = 0;
  for (const auto& d : m.phases) {
    if (m.tau(d) >= m.num_phases()) continue;
    sum += compute_bwt_d(m, d);
    ++n;
  }
  require(n > 0, Errc::NoLaterPhase, "no trained domain has a later phase");
  return sum / n;
}

double compute_fm(const PplMatrix& m) {
  double sum = 0.0;
  int n = 0;
  const int last = m.num_phases();
  for (const auto& d : m.phases) {
    const int t = m.tau(d);
    if (t >= last) continue;
    const double just_trained = m.at(t, d);
    double worst = m.at(t + 1, d);
    for (int p = t + 2; p <= last; ++p) worst = std::max(worst, m.at(p, d));
    sum += (worst - just_trained) / just_trained;
    ++n;
  }
  require(n > 0, Errc::NoLaterPhase, "no trained domain has a later phase");
  return sum / n;
}

double compute_fwt_d(const PplMatrix& m, const std::string& domain) {
  require(m.num_phases() >= 2, Errc::UndefinedFwt, "need at least two phases");
  require(m.domain_col(domain) >= 0, Errc::BadMatrix, "unknown eval domain " + domain);
  const int t = m.tau(domain);
  require(t != 1, Errc::UndefinedFwt, domain + " trained at phase 1");
  const int ref_phase = (t == 0) ? m.num_phases() : t - 1;
  const double base = m.at(1, domain);
  const double at_ref = m.at(ref_phase, domain);
  return -(at_ref - base) / base;
}

TransferReport build_transfer_report(const PplMatrix& m) {
  m.validate();
  TransferReport r;
  std::ostringstream note;
  note << "bwt/fm over trained domains with a later phase:";
  for (const auto& d : m.phases) {
    if (m.tau(d) >= m.num_phases()) continue;
    r.bwt_d[d] = compute_bwt_d(m, d);
    note << " " << d;
  }
  r.bwt = compute_bwt(m);
  r.fm = compute_fm(m);
  note << "; fwt over eval domains not trained at phase 1";
  for (const auto& d : m.eval_domains) {
    if (m.tau(d) == 1 || m.num_phases() < 2) continue;
    r.fwt_d[d] = compute_fwt_d(m, d);
  }
  r.domain_set_note = note.str();
  return r;
}

}  // namespace driftbench::metrics
