#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "factrank/features.hpp"
#include "factrank/gbdt.hpp"
#include "factrank/metrics.hpp"
#include "factrank/ranking.hpp"

namespace factrank {

/// k stratified portions. Fold f tests on portion f, validates on portion
/// (f+1) % k and trains on the rest.
struct FoldPlan {
    std::vector<std::vector<size_t>> portions;

    size_t size() const { return portions.size(); }
    const std::vector<size_t>& test(size_t fold) const { return portions.at(fold); }
    const std::vector<size_t>& validation(size_t fold) const { return portions.at((fold + 1) % portions.size()); }
    std::vector<size_t> train(size_t fold) const;
};

// Fakes and unchecked stories are shuffled separately and dealt round-robin,
// the unchecked deal continuing where the fakes stopped so portion sizes
// differ by at most one. Throws Error("too_few_examples") when a class has
// fewer than k members.
FoldPlan stratified_folds(std::span<const int> labels, size_t k = 5, uint64_t seed = 0);

// round_half_up(size * fakes / total), kept within [1, size-1].
size_t stratified_fake_count(size_t size, size_t fakes, size_t total);

// n samples drawn with replacement; fakes first, then unchecked. Throws
// Error("empty_class") when the portion lacks a class.
std::vector<std::vector<size_t>> bootstrap_samples(std::span<const size_t> portion, std::span<const int> labels,
                                                   size_t n = 50, size_t size = 200, uint64_t seed = 0);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;  // two-sided
};

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

double mean_of(std::span<const double> v);
// 1.96 * sample sd / sqrt(n).
double ci95_half_width(std::span<const double> v);

struct ExperimentOptions {
    std::vector<Strategy> methods = {Strategy::fakeness, Strategy::shares};
    std::vector<size_t> ks = {5, 10, 50, 100};
    uint64_t seed = 1;
    size_t folds = 5;
    size_t samples = 50;
    size_t sample_size = 200;
    std::vector<TrainConfig> grid = default_grid();
    double alpha = 0.05;
    double recall_target = 0.8;
};

struct MetricSummary {
    Strategy method = Strategy::fakeness;
    std::string metric;  // precision, recall, ndcg
    size_t k = 0;
    double mean = 0.0;
    double ci95 = 0.0;
    bool bold = false;  // best mean, or statistically tied with it
    std::vector<double> values;
};

struct FoldSummary {
    TrainConfig config;
    double validation_ndcg10 = 0.0;
    size_t trees = 0;
};

struct EvaluationReport {
    std::vector<Strategy> methods;
    std::vector<MetricSummary> rows;
    std::vector<std::vector<CurvePoint>> curves;  // mean curve per method
    std::vector<double> effort;                   // effort_to_recall per method
    double recall_target = 0.8;
    size_t executions = 0;
    std::vector<FoldSummary> folds;

    const MetricSummary& get(Strategy method, std::string_view metric, size_t k) const;
    double effort_of(Strategy method) const;

    // method, metric, k, mean, ci95, bold
    void write_tsv(std::ostream& out) const;
    // method, x, y
    void write_curves_csv(std::ostream& out) const;
};

EvaluationReport run_experiment(const FeatureMatrix& matrix, const ExperimentOptions& options);

}  // namespace factrank
