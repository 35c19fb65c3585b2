#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace factrank {

// A ranking is given as relevance flags in rank order: 1 = fake, 0 =
// unchecked. |F| defaults to the number of fakes in the ranking; bootstrap
// duplicates count as separate items.

// |R^k ∩ F| / k. Positions beyond the ranking count as misses.
double precision_at_k(std::span<const int> relevance, size_t k);

// |R^k ∩ F| / |F|. Throws Error("no_positives") when |F| = 0.
double recall_at_k(std::span<const int> relevance, size_t k);
double recall_at_k(std::span<const int> relevance, size_t k, size_t num_fakes);

// DCG@k / IdealDCG@k, gains 1/log2(i+1). Returns 0 and warns on stderr when
// |F| = 0.
double ndcg_at_k(std::span<const int> relevance, size_t k);
double ndcg_at_k(std::span<const int> relevance, size_t k, size_t num_fakes);

struct CurvePoint {
    double inspected = 0.0;  // fraction of the ranking inspected
    double recovered = 0.0;  // fraction of fakes found so far
};

// One point per prefix length 0..n. Throws Error("no_positives").
std::vector<CurvePoint> cost_curve(std::span<const int> relevance);

// Smallest inspected fraction whose recovered fraction reaches `target`.
// Throws Error("bad_target") outside [0,1].
double effort_to_recall(std::span<const CurvePoint> curve, double target);

// Indices sorted by key descending, then id ascending.
std::vector<size_t> rank_order(std::span<const double> keys, std::span<const std::string> ids);

}  // namespace factrank
