#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "factrank/features.hpp"

namespace factrank {

/// Per-slot z-score parameters. Categorical slots carry mean 0 / std 0 and
/// are left alone; numeric slots with zero variance map to 0.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<bool> numeric;

    static Normalizer fit(const FeatureSchema& schema, std::span<const FeatureVector> rows);

    void apply(FeatureVector& row) const;
    std::vector<FeatureVector> apply(std::span<const FeatureVector> rows) const;
    double scale(size_t slot, double x) const;
};

// Equal-frequency bin index per value. Equal values always share a bin, so
// ties can leave fewer than `bins` bins. Depends only on the value ranks.
std::vector<int> equal_frequency_bins(std::span<const double> values, int bins);

// Plug-in entropy (bits) of a label vector.
double entropy(std::span<const int> labels);

// IG = H(Y) - H(Y|X) in bits, over discrete codes.
double information_gain_codes(std::span<const int> codes, std::span<const int> labels);
double information_gain(std::span<const double> values, std::span<const int> labels, int bins = 10);
double information_gain(std::span<const std::string> values, std::span<const int> labels);

struct FeatureImportance {
    std::string name;
    FeatureSet set;
    double ig = 0.0;
    double percent = 0.0;  // ig * 100
};

// Descending IG; equal IG keeps manifest order.
std::vector<FeatureImportance> rank_features(const FeatureMatrix& matrix, int bins = 10);

void write_importance_tsv(const std::vector<FeatureImportance>& report, std::ostream& out, size_t top_n);

}  // namespace factrank
