#pragma once

#include <span>
#include <string>
#include <vector>

#include "factrank/features.hpp"

namespace factrank {

/// Row-major numeric matrix fed to the tree learner.
struct DenseMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    double at(size_t r, size_t c) const { return data[r * cols + c]; }
    const double* row(size_t r) const { return data.data() + r * cols; }
};

/// Expands categorical slots into indicator columns: one per retained
/// training category (most frequent first, at most `max_categories`) plus a
/// trailing "other" column. Numeric slots map to one column each, in
/// schema order.
class CategoricalEncoder {
public:
    static constexpr size_t kDefaultMaxCategories = 32;

    static CategoricalEncoder fit(const FeatureSchema& schema, std::span<const FeatureVector> rows,
                                  size_t max_categories = kDefaultMaxCategories);

    size_t width() const { return width_; }
    std::vector<std::string> column_names(const FeatureSchema& schema) const;

    void encode(const FeatureVector& row, double* out) const;
    DenseMatrix encode(std::span<const FeatureVector> rows) const;

    // Retained categories per slot (empty for numeric slots).
    const std::vector<std::vector<std::string>>& categories() const { return categories_; }
    static CategoricalEncoder from_parts(const FeatureSchema& schema, std::vector<std::vector<std::string>> categories);

private:
    void layout(const FeatureSchema& schema);

    std::vector<bool> categorical_;
    std::vector<std::vector<std::string>> categories_;
    std::vector<size_t> offset_;
    size_t width_ = 0;
};

}  // namespace factrank
