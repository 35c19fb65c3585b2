#include "factrank/encoding.hpp"

#include <algorithm>
#include <unordered_map>

#include "factrank/util.hpp"

namespace factrank {

void CategoricalEncoder::layout(const FeatureSchema& schema) {
    categorical_.assign(schema.size(), false);
    offset_.assign(schema.size(), 0);
    width_ = 0;
    for (size_t s = 0; s < schema.size(); ++s) {
        offset_[s] = width_;
        if (schema[s].kind == FeatureKind::categorical) {
            categorical_[s] = true;
            width_ += categories_[s].size() + 1;
        } else {
            width_ += 1;
        }
    }
}

CategoricalEncoder CategoricalEncoder::fit(const FeatureSchema& schema, std::span<const FeatureVector> rows,
                                           size_t max_categories) {
    CategoricalEncoder enc;
    enc.categories_.resize(schema.size());
    for (size_t s = 0; s < schema.size(); ++s) {
        if (schema[s].kind != FeatureKind::categorical) continue;
        std::unordered_map<std::string, size_t> freq;
        for (const auto& r : rows) ++freq[r.category(s)];
        std::vector<std::pair<std::string, size_t>> sorted(freq.begin(), freq.end());
        // Most frequent first; equal counts by category name.
        std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        if (sorted.size() > max_categories) sorted.resize(max_categories);
        for (auto& [name, count] : sorted) enc.categories_[s].push_back(name);
    }
    enc.layout(schema);
    return enc;
}

CategoricalEncoder CategoricalEncoder::from_parts(const FeatureSchema& schema,
                                                  std::vector<std::vector<std::string>> categories) {
    if (categories.size() != schema.size())
        throw Error("manifest_mismatch", "encoder slot count does not match the manifest");
    CategoricalEncoder enc;
    enc.categories_ = std::move(categories);
    for (size_t s = 0; s < schema.size(); ++s)
        if (schema[s].kind != FeatureKind::categorical && !enc.categories_[s].empty())
            throw Error("manifest_mismatch", "encoder has categories for numeric slot " + schema[s].name);
    enc.layout(schema);
    return enc;
}

std::vector<std::string> CategoricalEncoder::column_names(const FeatureSchema& schema) const {
    std::vector<std::string> names;
    names.reserve(width_);
    for (size_t s = 0; s < schema.size(); ++s) {
        if (!categorical_[s]) {
            names.push_back(schema[s].name);
            continue;
        }
        for (const auto& c : categories_[s]) names.push_back(schema[s].name + "=" + c);
        names.push_back(schema[s].name + "=<other>");
    }
    return names;
}

void CategoricalEncoder::encode(const FeatureVector& row, double* out) const {
    if (row.values.size() != categorical_.size())
        throw Error("manifest_mismatch", "vector width does not match the encoder");
    for (size_t s = 0; s < categorical_.size(); ++s) {
        double* dst = out + offset_[s];
        if (!categorical_[s]) {
            *dst = std::get<double>(row.values[s]);
            continue;
        }
        const auto& cats = categories_[s];
        const auto& v = std::get<std::string>(row.values[s]);
        std::fill(dst, dst + cats.size() + 1, 0.0);
        const auto it = std::find(cats.begin(), cats.end(), v);
        dst[it - cats.begin()] = 1.0;  // end() lands on "other"
    }
}

DenseMatrix CategoricalEncoder::encode(std::span<const FeatureVector> rows) const {
    DenseMatrix m;
    m.rows = rows.size();
    m.cols = width_;
    m.data.assign(m.rows * m.cols, 0.0);
    for (size_t r = 0; r < rows.size(); ++r) encode(rows[r], m.data.data() + r * m.cols);
    return m;
}

}  // namespace factrank
