#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "factrank/features.hpp"
#include "factrank/gbdt.hpp"

namespace factrank {

enum class Strategy { fakeness, shares, distinct_groups, distinct_users };

inline constexpr std::array<Strategy, 4> kStrategies = {Strategy::fakeness, Strategy::shares,
                                                        Strategy::distinct_groups, Strategy::distinct_users};

std::string to_string(Strategy s);
// Throws Error("bad_strategy").
Strategy parse_strategy(std::string_view s);

struct RankedEntry {
    std::string story_id;
    double score = 0.0;  // probability for fakeness, the count otherwise
    double key = 0.0;    // sort key (margin for fakeness)
    int label = 0;
};

struct RankedList {
    Strategy strategy = Strategy::fakeness;
    std::vector<RankedEntry> entries;
};

// Sort keys of every row: model margins, or the raw count slot.
std::vector<double> strategy_keys(const FeatureMatrix& matrix, Strategy strategy, const FakenessModel* model);

// Descending key, ties by story_id ascending. Throws Error("model_required")
// for fakeness without a model.
RankedList rank_stories(const FeatureMatrix& matrix, Strategy strategy, const FakenessModel* model = nullptr);

}  // namespace factrank
