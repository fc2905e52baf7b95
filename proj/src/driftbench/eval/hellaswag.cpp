#include "driftbench/eval/hellaswag.h"

#include <nlohmann/json.hpp>

#include "driftbench/core/error.h"
#include "driftbench/core/io.h"
#include "driftbench/core/rng.h"

namespace driftbench::eval {

using nlohmann::json;

void HellaSwagItem::validate() const {
  require(gold >= 1 && gold <= 4, Errc::Precondition, "gold index out of 1..4");
  for (const auto& e : endings) {
    require(!e.empty(), Errc::Precondition, "empty ending");
  }
}

HellaSwagScore hellaswag_score(const model::LanguageModel& m, const HellaSwagItem& item) {
  item.validate();
  const size_t ctx_budget = static_cast<size_t>(m.context_len());
  HellaSwagScore out;
  for (int i = 0; i < 4; ++i) {
    const auto& ending = item.endings[static_cast<size_t>(i)];
    // Truncate context from the left so context + ending fits the window.
    size_t keep = item.context.size();
    const size_t budget = ctx_budget + 1;  // window may carry ctx+1 tokens
    if (keep + ending.size() > budget) {
      keep = ending.size() >= budget ? 0 : budget - ending.size();
    }
    std::vector<uint32_t> window(item.context.end() - static_cast<ptrdiff_t>(keep),
                                 item.context.end());
    window.insert(window.end(), ending.begin(), ending.end());
    require(window.size() >= 2, Errc::Precondition, "item too short to score");

    const auto nll = m.position_nll(window);
    // position_nll[p] scores window[p+1]; ending tokens sit at the tail.
    size_t ending_scored = ending.size();
    if (keep == 0 && ending_scored > nll.size()) ending_scored = nll.size();
    double sum = 0.0;
    for (size_t p = nll.size() - ending_scored; p < nll.size(); ++p) sum += nll[p];
    out.scores[static_cast<size_t>(i)] = sum / static_cast<double>(ending_scored);
  }
  out.pick = 1;
  for (int i = 1; i < 4; ++i) {
    if (out.scores[static_cast<size_t>(i)] < out.scores[static_cast<size_t>(out.pick - 1)]) {
      out.pick = i + 1;
    }
  }
  return out;
}

double hellaswag_accuracy(const model::LanguageModel& m,
                          const std::vector<HellaSwagItem>& items) {
  require(!items.empty(), Errc::Precondition, "no items");
  int64_t correct = 0;
  for (const auto& item : items) {
    if (hellaswag_score(m, item).pick == item.gold) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

std::vector<HellaSwagItem> select_subset(std::vector<HellaSwagItem> items, size_t n,
                                         uint64_t seed) {
  Rng rng(seed);
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
  if (items.size() > n) items.resize(n);
  return items;
}

std::vector<HellaSwagItem> load_hellaswag_items(const std::filesystem::path& path) {
  json doc = json::parse(read_text_file(path));
  std::vector<HellaSwagItem> items;
  for (const auto& j : doc.at("items")) {
    HellaSwagItem item;
    item.context = j.at("context").get<std::vector<uint32_t>>();
    const auto& ends = j.at("endings");
    require(ends.size() == 4, Errc::BadConfig, "item needs exactly 4 endings");
    for (size_t i = 0; i < 4; ++i) {
      item.endings[i] = ends[i].get<std::vector<uint32_t>>();
    }
    item.gold = j.at("gold").get<int>();
    item.validate();
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<HellaSwagItem> make_desk_items(
    const std::vector<std::pair<std::string, std::span<const uint32_t>>>& domain_vals,
    int n_items, int context_tokens, int ending_tokens, uint64_t seed) {
  require(domain_vals.size() >= 2, Errc::Precondition, "need at least two domains");
  const int span_len = context_tokens + ending_tokens;
  for (const auto& [name, val] : domain_vals) {
    require(static_cast<int64_t>(val.size()) >= span_len, Errc::InsufficientCorpus,
            "val split of " + name + " too small for item synthesis");
  }
  Rng rng(seed);
  std::vector<HellaSwagItem> items;
  items.reserve(static_cast<size_t>(n_items));
  for (int i = 0; i < n_items; ++i) {
    const size_t home = static_cast<size_t>(i) % domain_vals.size();
    const auto& val = domain_vals[home].second;
    const size_t start = static_cast<size_t>(rng.below(val.size() - span_len + 1));
    HellaSwagItem item;
    item.context.assign(val.begin() + start, val.begin() + start + context_tokens);
    std::vector<uint32_t> gold_ending(val.begin() + start + context_tokens,
                                      val.begin() + start + span_len);
    item.gold = 1 + static_cast<int>(rng.below(4));
    int slot = 0;
    for (int e = 0; e < 4; ++e) {
      if (e == item.gold - 1) {
        item.endings[static_cast<size_t>(e)] = gold_ending;
        continue;
      }
      // Distractor from another domain, cycling.
      const size_t other = (home + 1 + static_cast<size_t>(slot++)) % domain_vals.size();
      const auto& oval = domain_vals[other].second;
      const size_t ostart = static_cast<size_t>(rng.below(oval.size() - ending_tokens + 1));
      item.endings[static_cast<size_t>(e)]
          .assign(oval.begin() + ostart, oval.begin() + ostart + ending_tokens);
    }
    items.push_back(std::move(item));
  }
  return items;
}

void save_hellaswag_items(const std::vector<HellaSwagItem>& items,
                          const std::filesystem::path& path) {
  json doc;
  doc["items"] = json::array();
  for (const auto& item : items) {
    json j;
    j["context"] = item.context;
    j["endings"] = {item.endings[0], item.endings[1], item.endings[2], item.endings[3]};
    j["gold"] = item.gold;
    doc["items"].push_back(std::move(j));
  }
  write_text_file_atomic(path, doc.dump() + "\n");
}

}  // namespace driftbench::eval
