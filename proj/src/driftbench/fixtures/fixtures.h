#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "driftbench/metrics/ortho.h"
#include "driftbench/metrics/transfer.h"

namespace driftbench::fixtures {

/// One expected metric value for a fixture condition, with its tolerance and
/// a citation into the published results it was transcribed from.
struct ExpectedValue {
  std::string metric;  // "bwt", "fm", "bwt_d:<domain>", "fwt_d:<domain>",
                       // "overall_mean_abs_cos", "l2_global",
                       // "orth_at:<thr>:pair", "orth_at:<thr>:sample",
                       // "l2_of_mean:<m>"
  double value = 0.0;
  double tol = 0.0;
  std::string source;
};

/// A published quantity the recomputation provably cannot match. `computed`
/// (when present) is asserted instead, so the exception stays pinned rather
/// than silently absorbed.
struct KnownException {
  std::string metric;
  double reported = 0.0;
  std::optional<double> computed;
  double tol = 1e-4;
  std::string note;
};

/// One oracle condition: a published PPL matrix and/or per-pair gradient
/// cosine means, plus the expected metric values recomputation must hit.
struct Fixture {
  std::string name;
  std::string source;
  std::optional<metrics::PplMatrix> matrix;
  std::vector<std::string> grad_domains;
  std::vector<std::tuple<std::string, std::string, double>> grad_pair_means;
  std::vector<ExpectedValue> expected;
  std::vector<KnownException> known_exceptions;
};

struct MetricCheck {
  std::string metric;
  double expected = 0.0;
  double tol = 0.0;
  double computed = 0.0;
  double delta = 0.0;
  bool pass = false;
  bool is_exception = false;
  std::string source;
};

struct FixtureResult {
  std::string name;
  std::vector<MetricCheck> checks;
  bool pass = false;
};

/// Recomputes every expected metric from the fixture's own data and compares
/// within tolerance; known-exception entries check their pinned computed
/// value when present. Throws BadFixture on malformed input.
FixtureResult verify_fixture(const Fixture& f);

std::vector<Fixture> load_fixture_file(const std::filesystem::path& path);
std::vector<Fixture> load_fixture_dir(const std::filesystem::path& dir);

std::vector<FixtureResult> verify_all(const std::vector<Fixture>& fixtures);

/// One line per fixture plus per-metric detail lines for failures.
std::string render_results(const std::vector<FixtureResult>& results);

}  // namespace driftbench::fixtures
