#pragma once

#include <map>
#include <string>
#include <vector>

namespace driftbench::metrics {

/// T×D held-out perplexity matrix. Rows are phases in training order, columns
/// are evaluation domains. `phases` lists the trained domains in order, so
/// tau(d) (the 1-based phase at which d was trained) is derived from it.
struct PplMatrix {
  std::vector<std::string> phases;        // trained domains, length T
  std::vector<std::string> eval_domains;  // length D; superset of phases
  std::vector<std::vector<double>> cells;  // T rows x D cols, all > 0

  int num_phases() const { return static_cast<int>(phases.size()); }
  int num_domains() const { return static_cast<int>(eval_domains.size()); }

  /// 1-based phase index at which `domain` was trained, or 0 if never trained.
  int tau(const std::string& domain) const;

  int domain_col(const std::string& domain) const;  // -1 if absent

  double at(int phase_1based, const std::string& domain) const;

  /// Throws BadMatrix on shape problems, non-positive cells, duplicate trained
  /// domains, or trained domains missing from eval_domains.
  void validate() const;
};

/// Per-domain backward transfer: -(M[T,d] - M[tau(d),d]) / M[tau(d),d].
/// Throws NoLaterPhase when d was trained at the final phase (those domains
/// render as "---" and never enter the averages).
double compute_bwt_d(const PplMatrix& m, const std::string& domain);

/// Mean of bwt_d over trained domains with tau(d) < T.
double compute_bwt(const PplMatrix& m);

/// Mean over qualifying domains of (max_{t>tau} M[t,d] - M[tau,d]) / M[tau,d].
/// The per-domain term is signed: an improving domain contributes a negative
/// value rather than being clamped at zero.
double compute_fm(const PplMatrix& m);

/// Forward transfer: -(M[tau(d)-1,d] - M[1,d]) / M[1,d]; for never-trained
/// domains the reference row is the final phase T. Throws UndefinedFwt for a
/// domain trained at phase 1.
double compute_fwt_d(const PplMatrix& m, const std::string& domain);

struct TransferReport {
  std::map<std::string, double> bwt_d;  // qualifying trained domains only
  double bwt = 0.0;
  double fm = 0.0;
  std::map<std::string, double> fwt_d;  // domains with a defined fwt
  std::string domain_set_note;
};

TransferReport build_transfer_report(const PplMatrix& m);

}  // namespace driftbench::metrics
