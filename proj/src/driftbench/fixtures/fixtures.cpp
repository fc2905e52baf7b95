#include "driftbench/fixtures/fixtures.h"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"

namespace driftbench::fixtures {

using nlohmann::json;

namespace {

double compute_metric(const Fixture& f, const std::string& metric) {
  if (metric.starts_with("l2_of_mean:")) {
    const double m = std::stod(metric.substr(std::string("l2_of_mean:").size()));
    return std::sqrt(1.0 - m * m);
  }

  if (metric == "bwt" || metric == "fm" || metric.starts_with("bwt_d:") ||
      metric.starts_with("fwt_d:")) {
    require(f.matrix.has_value(), Errc::BadFixture,
            f.name + ": metric " + metric + " needs a matrix");
    const auto& m = *f.matrix;
    if (metric == "bwt") return metrics::compute_bwt(m);
    if (metric == "fm") return metrics::compute_fm(m);
    if (metric.starts_with("bwt_d:")) return metrics::compute_bwt_d(m, metric.substr(6));
    return metrics::compute_fwt_d(m, metric.substr(6));
  }

  require(!f.grad_pair_means.empty(), Errc::BadFixture,
          f.name + ": metric " + metric + " needs grad pair means");
  const auto g = metrics::grad_matrix_from_pair_means(f.grad_domains, f.grad_pair_means);
  if (metric == "overall_mean_abs_cos") return g.overall_mean_abs_cos();
  if (metric == "l2_global") return metrics::l2_orth_fraction(g, metrics::L2Mode::Global);
  if (metric == "l2_per_pair") return metrics::l2_orth_fraction(g, metrics::L2Mode::PerPair);
  if (metric.starts_with("orth_at:")) {
    const auto rest = metric.substr(8);
    const auto colon = rest.find(':');
    require(colon != std::string::npos, Errc::BadFixture, "bad orth_at metric " + metric);
    const double thr = std::stod(rest.substr(0, colon));
    const std::string level = rest.substr(colon + 1);
    return metrics::orth_at_threshold(
        g, thr, level == "sample" ? metrics::OrthLevel::Sample : metrics::OrthLevel::Pair);
  }
  fail(Errc::BadFixture, f.name + ": unknown metric " + metric);
}

}  // namespace

FixtureResult verify_fixture(const Fixture& f) {
  require(!f.expected.empty() || !f.known_exceptions.empty(), Errc::BadFixture,
          f.name + ": fixture carries no expectations");
  if (f.matrix) {
    try {
      f.matrix->validate();
    } catch (const Error& e) {
      fail(Errc::BadFixture, f.name + ": " + e.what());
    }
  }
  FixtureResult result;
  result.name = f.name;
  result.pass = true;
  for (const auto& exp : f.expected) {
    require(exp.tol > 0.0, Errc::BadFixture, f.name + ": expected value without tolerance");
    require(!exp.source.empty(), Errc::BadFixture, f.name + ": expected value without citation");
    MetricCheck check;
    check.metric = exp.metric;
    check.expected = exp.value;
    check.tol = exp.tol;
    check.computed = compute_metric(f, exp.metric);
    check.delta = check.computed - exp.value;
    check.pass = std::fabs(check.delta) <= exp.tol;
    check.source = exp.source;
    result.pass = result.pass && check.pass;
    result.checks.push_back(std::move(check));
  }
  for (const auto& ex : f.known_exceptions) {
    MetricCheck check;
    check.metric = ex.metric;
    check.is_exception = true;
    check.expected = ex.reported;
    check.tol = ex.tol;
    check.computed = compute_metric(f, ex.metric);
    check.delta = check.computed - ex.reported;
    check.source = ex.note;
    // The exception is pinned: recomputation must match the documented
    // computed value (when given) and must genuinely miss the reported one.
    if (ex.computed.has_value()) {
      check.pass = std::fabs(check.computed - *ex.computed) <= ex.tol &&
                   std::fabs(check.computed - ex.reported) > ex.tol;
    } else {
      check.pass = std::fabs(check.computed - ex.reported) > ex.tol;
    }
    result.pass = result.pass && check.pass;
    result.checks.push_back(std::move(check));
  }
  return result;
}

std::vector<Fixture> load_fixture_file(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    fail(Errc::BadFixture, path.string() + ": " + e.what());
  }
  std::vector<Fixture> fixtures;
  for (const auto& c : doc.at("conditions")) {
    Fixture f;
    f.name = c.at("name").get<std::string>();
    f.source = c.value("source", "");
    if (c.contains("cells")) {
      metrics::PplMatrix m;
      m.phases = c.at("phases").get<std::vector<std::string>>();
      m.eval_domains = c.at("eval_domains").get<std::vector<std::string>>();
      m.cells = c.at("cells").get<std::vector<std::vector<double>>>();
      f.matrix = std::move(m);
    }
    if (c.contains("grad_pair_means")) {
      f.grad_domains = c.at("grad_domains").get<std::vector<std::string>>();
      for (const auto& p : c.at("grad_pair_means")) {
        f.grad_pair_means.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>(),
                                       p.at(2).get<double>());
      }
    }
    if (c.contains("expected")) {
      for (const auto& e : c.at("expected")) {
        f.expected.push_back(ExpectedValue{e.at("metric").get<std::string>(),
                                           e.at("value").get<double>(),
                                           e.at("tol").get<double>(),
                                           e.at("source").get<std::string>()});
      }
    }
    if (c.contains("known_exceptions")) {
      for (const auto& e : c.at("known_exceptions")) {
        KnownException ex;
        ex.metric = e.at("metric").get<std::string>();
        ex.reported = e.at("reported").get<double>();
        if (e.contains("computed")) ex.computed = e.at("computed").get<double>();
        ex.tol = e.value("tol", 1e-4);
        ex.note = e.at("note").get<std::string>();
        f.known_exceptions.push_back(std::move(ex));
      }
    }
    fixtures.push_back(std::move(f));
  }
  return fixtures;
}

std::vector<Fixture> load_fixture_dir(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), Errc::Io, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Fixture> fixtures;
  for (const auto& file : files) {
    auto batch = load_fixture_file(file);
    fixtures.insert(fixtures.end(), std::make_move_iterator(batch.begin()),
                    std::make_move_iterator(batch.end()));
  }
  return fixtures;
}

std::vector<FixtureResult> verify_all(const std::vector<Fixture>& fixtures) {
  std::vector<FixtureResult> results;
  results.reserve(fixtures.size());
  for (const auto& f : fixtures) results.push_back(verify_fixture(f));
  return results;
}

std::string render_results(const std::vector<FixtureResult>& results) {
  std::ostringstream out;
  for (const auto& r : results) {
    out << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "\n";
    for (const auto& c : r.checks) {
      char line[256];
      std::snprintf(line, sizeof(line), "  %s %-28s computed % .6f expected % .6f delta % .2e%s\n",
                    c.pass ? "ok  " : "FAIL", c.metric.c_str(), c.computed, c.expected, c.delta,
                    c.is_exception ? "  [known exception]" : "");
      out << line;
    }
  }
  return out.str();
}

}  // namespace driftbench::fixtures
