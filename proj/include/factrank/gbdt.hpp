#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "factrank/analysis.hpp"
#include "factrank/encoding.hpp"
#include "factrank/features.hpp"

namespace factrank {

struct TrainConfig {
    int max_depth = 6;
    double learning_rate = 0.1;
    int num_rounds = 200;
    int min_leaf = 5;
    uint64_t seed = 0;
    double lambda = 1.0;
    double min_child_weight = 1.0;
    // Rounds without validation-loss improvement before stopping; only
    // used when a validation split is given.
    int patience = 20;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Table of max_depth {6,10,15} x learning_rate {0.001,0.01,0.1,1}, other
// fields copied from `base`. Ordered by depth, then rate.
std::vector<TrainConfig> default_grid(const TrainConfig& base = {});

/// Binary tree over dense columns. Internal nodes send x[feature] <=
/// threshold left. Categorical indicators split at 0.5, i.e. on equality.
struct TreeNode {
    int32_t feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int32_t left = -1;
    int32_t right = -1;
    double value = 0.0;

    bool leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(const double* x) const;
    size_t depth() const;
};

struct Booster {
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<RegressionTree> trees;

    // base + rate * sum of tree outputs, accumulated in tree order.
    double margin(const double* x) const;
};

double logistic(double margin);
// Mean logistic loss of margins against 0/1 labels.
double log_loss(std::span<const double> margins, std::span<const int> labels);

struct TrainTrace {
    std::vector<double> train_loss;  // index 0 = before the first tree
    std::vector<double> valid_loss;
    size_t best_round = 0;           // number of trees kept
    std::vector<double> step_scale;  // backtracking factor per tree
};

/// Columns sorted once so that every tree of every grid point can reuse
/// the orders. Constant columns are dropped. Each column keeps only the rows
/// that differ from its most frequent value (`fill`); `split` counts the
/// kept entries below it.
struct PresortedMatrix {
    std::vector<uint32_t> columns;
    std::vector<double> fill;
    std::vector<std::vector<uint32_t>> order;
    std::vector<std::vector<double>> values;
    std::vector<uint32_t> split;

    static PresortedMatrix build(const DenseMatrix& X);
};

// Newton boosting on logistic loss. Throws Error("degenerate_labels") when
// only one class is present.
Booster fit_booster(const DenseMatrix& X, const PresortedMatrix& sorted, std::span<const int> labels,
                    const TrainConfig& config,
                    const DenseMatrix* valid = nullptr, std::span<const int> valid_labels = {},
                    TrainTrace* trace = nullptr);

/// Full scoring pipeline: z-score -> categorical indicators -> trees.
/// Bound to the feature manifest it was trained on.
struct FakenessModel {
    uint64_t manifest_checksum = 0;
    TrainConfig config;
    int64_t trained_at = 0;
    Normalizer normalizer;
    CategoricalEncoder encoder;
    Booster booster;

    double margin(const FeatureVector& row) const;
    double predict(const FeatureVector& row) const;
    // Throws Error("manifest_mismatch") when the matrix schema differs.
    std::vector<double> margins(const FeatureMatrix& matrix) const;
    std::vector<double> predict(const FeatureMatrix& matrix) const;
    void check_schema(const FeatureSchema& schema) const;
};

// Prepared train/validation data for one split, shared by all grid points.
struct SplitData {
    Normalizer normalizer;
    CategoricalEncoder encoder;
    DenseMatrix train;
    std::vector<int> train_labels;
    PresortedMatrix presorted;
    DenseMatrix valid;
    std::vector<int> valid_labels;
    std::vector<std::string> valid_ids;
    uint64_t manifest_checksum = 0;

    static SplitData prepare(const FeatureSchema& schema, std::span<const FeatureVector> train,
                             std::span<const FeatureVector> valid);
    SplitData(const SplitData&) = delete;
    SplitData(SplitData&&) = default;

private:
    SplitData() = default;
};

FakenessModel train_model(const FeatureMatrix& train, const TrainConfig& config,
                          const FeatureMatrix* valid = nullptr, TrainTrace* trace = nullptr,
                          int64_t trained_at = 0);
FakenessModel train_model(const SplitData& data, const TrainConfig& config, TrainTrace* trace = nullptr,
                          int64_t trained_at = 0);

struct GridPoint {
    TrainConfig config;
    double ndcg10 = 0.0;
    double valid_loss = 0.0;  // reported only
};

struct GridResult {
    TrainConfig best;
    double best_ndcg10 = 0.0;
    std::vector<GridPoint> points;
    FakenessModel model;  // the winner, as trained during the search
};

// Selects the validation NDCG@10 argmax; ties go to the smaller depth, then
// the smaller rate. Throws Error("empty_grid").
GridResult grid_search(const SplitData& data, std::span<const TrainConfig> grid, int64_t trained_at = 0);
GridResult grid_search(const FeatureMatrix& train, const FeatureMatrix& valid, std::span<const TrainConfig> grid,
                       int64_t trained_at = 0);

}  // namespace factrank
