#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "driftbench/model/language_model.h"

namespace driftbench::eval {

/// One four-way ending-completion item, pre-tokenized. gold is 1-based.
struct HellaSwagItem {
  std::vector<uint32_t> context;
  std::array<std::vector<uint32_t>, 4> endings;
  int gold = 1;

  void validate() const;
};

struct HellaSwagScore {
  std::array<double, 4> scores{};  // mean per-token NLL over ending tokens only
  int pick = 1;                    // 1-based argmin; ties break to the lowest index
};

/// Ending-only scoring: score_i is the mean NLL of ending i's tokens given
/// context + the ending prefix; context tokens are never scored. When
/// context + ending exceeds the model context, the context is truncated from
/// the left.
HellaSwagScore hellaswag_score(const model::LanguageModel& m, const HellaSwagItem& item);

double hellaswag_accuracy(const model::LanguageModel& m,
                          const std::vector<HellaSwagItem>& items);

/// The fixed evaluation subset: a seeded Fisher-Yates shuffle of the item
/// list, then the first n items.
std::vector<HellaSwagItem> select_subset(std::vector<HellaSwagItem> items, size_t n,
                                         uint64_t seed);

std::vector<HellaSwagItem> load_hellaswag_items(const std::filesystem::path& path);
void save_hellaswag_items(const std::vector<HellaSwagItem>& items,
                          const std::filesystem::path& path);

/// Desk-scale item synthesis: each item's context and gold ending are a
/// contiguous slice of one domain's validation split (the gold ending is the
/// true continuation); the three distractors are slices of the other domains.
/// Items cycle through the domains; gold positions are seeded-random.
std::vector<HellaSwagItem> make_desk_items(
    const std::vector<std::pair<std::string, std::span<const uint32_t>>>& domain_vals,
    int n_items, int context_tokens, int ending_tokens, uint64_t seed);

}  // namespace driftbench::eval
