#include "driftbench/sched/ledger.h"

#include <fstream>
#include <sstream>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"

namespace driftbench::sched {

void Ledger::append(const nlohmann::json& event) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  require(out.good(), Errc::Io, "cannot append to ledger " + path_.string());
  out << event.dump() << "\n";
  require(out.good(), Errc::Io, "short ledger write");
}

std::vector<nlohmann::json> Ledger::read_all(const std::filesystem::path& path) {
  std::vector<nlohmann::json> events;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    events.push_back(nlohmann::json::parse(line));
  }
  return events;
}

}  // namespace driftbench::sched
