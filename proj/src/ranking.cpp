#include "factrank/ranking.hpp"

#include "factrank/metrics.hpp"
#include "factrank/util.hpp"

namespace factrank {

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::fakeness: return "fakeness";
        case Strategy::shares: return "shares";
        case Strategy::distinct_groups: return "distinct_groups";
        case Strategy::distinct_users: return "distinct_users";
    }
    return "fakeness";
}

Strategy parse_strategy(std::string_view s) {
    for (Strategy st : kStrategies)
        if (s == to_string(st)) return st;
    throw Error("bad_strategy", "unknown strategy '" + std::string(s) +
                                    "' (expected fakeness, shares, distinct_groups or distinct_users)");
}

std::vector<double> strategy_keys(const FeatureMatrix& matrix, Strategy strategy, const FakenessModel* model) {
    if (strategy == Strategy::fakeness) {
        if (!model) throw Error("model_required", "the fakeness strategy needs a trained model");
        return model->margins(matrix);
    }
    const char* slot_name = strategy == Strategy::shares            ? "count_shares"
                            : strategy == Strategy::distinct_groups ? "count_groups"
                                                                    : "count_users";
    const size_t slot = matrix.schema.require(slot_name);
    std::vector<double> keys;
    keys.reserve(matrix.rows.size());
    for (const auto& r : matrix.rows) keys.push_back(r.number(slot));
    return keys;
}

RankedList rank_stories(const FeatureMatrix& matrix, Strategy strategy, const FakenessModel* model) {
    const auto keys = strategy_keys(matrix, strategy, model);
    std::vector<std::string> ids;
    ids.reserve(matrix.rows.size());
    for (const auto& r : matrix.rows) ids.push_back(r.story_id);
    RankedList list;
    list.strategy = strategy;
    for (size_t i : rank_order(keys, ids)) {
        const double score = strategy == Strategy::fakeness ? logistic(keys[i]) : keys[i];
        list.entries.push_back({ids[i], score, keys[i], matrix.rows[i].label});
    }
    return list;
}

}  // namespace factrank
