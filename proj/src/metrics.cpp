#include "factrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "factrank/util.hpp"

namespace factrank {

namespace {

size_t hits_at(std::span<const int> relevance, size_t k) {
    size_t hits = 0;
    const size_t n = std::min(k, relevance.size());
    for (size_t i = 0; i < n; ++i)
        if (relevance[i]) ++hits;
    return hits;
}

size_t count_fakes(std::span<const int> relevance) {
    return static_cast<size_t>(std::count_if(relevance.begin(), relevance.end(), [](int r) { return r != 0; }));
}

void require_k(size_t k) {
    if (k == 0) throw Error("bad_k", "k must be at least 1");
}

}  // namespace

double precision_at_k(std::span<const int> relevance, size_t k) {
    require_k(k);
    return static_cast<double>(hits_at(relevance, k)) / static_cast<double>(k);
}

double recall_at_k(std::span<const int> relevance, size_t k) { return recall_at_k(relevance, k, count_fakes(relevance)); }

double recall_at_k(std::span<const int> relevance, size_t k, size_t num_fakes) {
    require_k(k);
    if (num_fakes == 0) throw Error("no_positives", "recall is undefined without fakes");
    return static_cast<double>(hits_at(relevance, k)) / static_cast<double>(num_fakes);
}

double ndcg_at_k(std::span<const int> relevance, size_t k) { return ndcg_at_k(relevance, k, count_fakes(relevance)); }

double ndcg_at_k(std::span<const int> relevance, size_t k, size_t num_fakes) {
    require_k(k);
    if (num_fakes == 0) {
        std::cerr << "warning: NDCG@" << k << " over a ranking without fakes, reporting 0\n";
        return 0.0;
    }
    double dcg = 0.0;
    const size_t n = std::min(k, relevance.size());
    for (size_t i = 0; i < n; ++i)
        if (relevance[i]) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    double ideal = 0.0;
    const size_t m = std::min(k, num_fakes);
    for (size_t i = 0; i < m; ++i) ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return dcg / ideal;
}

std::vector<CurvePoint> cost_curve(std::span<const int> relevance) {
    const size_t fakes = count_fakes(relevance);
    if (fakes == 0) throw Error("no_positives", "cost curve needs at least one fake");
    const double n = static_cast<double>(relevance.size());
    std::vector<CurvePoint> curve;
    curve.reserve(relevance.size() + 1);
    curve.push_back({0.0, 0.0});
    size_t found = 0;
    for (size_t i = 0; i < relevance.size(); ++i) {
        if (relevance[i]) ++found;
        curve.push_back({static_cast<double>(i + 1) / n, static_cast<double>(found) / static_cast<double>(fakes)});
    }
    return curve;
}

double effort_to_recall(std::span<const CurvePoint> curve, double target) {
    if (!(target >= 0.0 && target <= 1.0)) throw Error("bad_target", "recall target must lie in [0,1]");
    // Averaged curves carry rounding noise; accept a 1e-12 shortfall.
    for (const auto& p : curve)
        if (p.recovered + 1e-12 >= target) return p.inspected;
    return 1.0;
}

std::vector<size_t> rank_order(std::span<const double> keys, std::span<const std::string> ids) {
    if (keys.size() != ids.size()) throw Error("length_mismatch", "keys and ids differ in length");
    std::vector<size_t> order(keys.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (keys[a] != keys[b]) return keys[a] > keys[b];
        return ids[a] < ids[b];
    });
    return order;
}

}  // namespace factrank
