#include "factrank/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>

#include "factrank/util.hpp"

namespace factrank {

Normalizer Normalizer::fit(const FeatureSchema& schema, std::span<const FeatureVector> rows) {
    if (rows.size() < 2) throw Error("too_few_rows", "normalizer needs at least 2 training vectors");
    Normalizer n;
    const size_t d = schema.size();
    n.mean.assign(d, 0.0);
    n.stddev.assign(d, 0.0);
    n.numeric.assign(d, false);
    const double count = static_cast<double>(rows.size());
    for (size_t s = 0; s < d; ++s) {
        if (schema[s].kind != FeatureKind::numeric) continue;
        n.numeric[s] = true;
        double sum = 0.0;
        for (const auto& r : rows) sum += r.number(s);
        const double mu = sum / count;
        double ss = 0.0;
        for (const auto& r : rows) {
            const double dx = r.number(s) - mu;
            ss += dx * dx;
        }
        n.mean[s] = mu;
        n.stddev[s] = std::sqrt(ss / count);
    }
    return n;
}

double Normalizer::scale(size_t slot, double x) const {
    if (!numeric[slot]) return x;
    const double sd = stddev[slot];
    if (!(sd > 0.0)) return 0.0;
    return (x - mean[slot]) / sd;
}

void Normalizer::apply(FeatureVector& row) const {
    if (row.values.size() != numeric.size())
        throw Error("manifest_mismatch", "vector width does not match the normalizer");
    for (size_t s = 0; s < numeric.size(); ++s)
        if (numeric[s]) row.values[s] = scale(s, std::get<double>(row.values[s]));
}

std::vector<FeatureVector> Normalizer::apply(std::span<const FeatureVector> rows) const {
    std::vector<FeatureVector> out(rows.begin(), rows.end());
    for (auto& r : out) apply(r);
    return out;
}

std::vector<int> equal_frequency_bins(std::span<const double> values, int bins) {
    if (bins < 1) throw Error("bad_bins", "bin count must be positive");
    const size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<int> out(n, 0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        // A run of ties takes the bin of its first rank.
        const int bin = static_cast<int>(i * static_cast<size_t>(bins) / n);
        for (size_t t = i; t < j; ++t) out[order[t]] = bin;
        i = j;
    }
    return out;
}

namespace {

double entropy_of_counts(const std::map<int, size_t>& counts, size_t total) {
    double h = 0.0;
    for (const auto& [label, c] : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

}  // namespace

double entropy(std::span<const int> labels) {
    std::map<int, size_t> counts;
    for (int y : labels) ++counts[y];
    return labels.empty() ? 0.0 : entropy_of_counts(counts, labels.size());
}

double information_gain_codes(std::span<const int> codes, std::span<const int> labels) {
    if (codes.size() != labels.size()) throw Error("length_mismatch", "values and labels differ in length");
    if (labels.size() < 2) throw Error("too_few_rows", "information gain needs at least 2 values");
    std::map<int, std::map<int, size_t>> table;
    for (size_t i = 0; i < codes.size(); ++i) ++table[codes[i]][labels[i]];
    const double n = static_cast<double>(labels.size());
    double conditional = 0.0;
    for (const auto& [code, counts] : table) {
        size_t total = 0;
        for (const auto& [y, c] : counts) total += c;
        conditional += static_cast<double>(total) / n * entropy_of_counts(counts, total);
    }
    const double h = entropy(labels);
    return std::clamp(h - conditional, 0.0, h);
}

double information_gain(std::span<const double> values, std::span<const int> labels, int bins) {
    if (values.size() != labels.size()) throw Error("length_mismatch", "values and labels differ in length");
    const auto codes = equal_frequency_bins(values, bins);
    return information_gain_codes(codes, labels);
}

double information_gain(std::span<const std::string> values, std::span<const int> labels) {
    if (values.size() != labels.size()) throw Error("length_mismatch", "values and labels differ in length");
    std::map<std::string_view, int> ids;
    std::vector<int> codes;
    codes.reserve(values.size());
    for (const auto& v : values) codes.push_back(ids.try_emplace(v, static_cast<int>(ids.size())).first->second);
    return information_gain_codes(codes, labels);
}

std::vector<FeatureImportance> rank_features(const FeatureMatrix& matrix, int bins) {
    const auto labels = matrix.labels();
    std::vector<FeatureImportance> report;
    report.reserve(matrix.schema.size());
    for (size_t s = 0; s < matrix.schema.size(); ++s) {
        const auto& spec = matrix.schema[s];
        double ig = 0.0;
        if (spec.kind == FeatureKind::numeric) {
            std::vector<double> col;
            col.reserve(matrix.rows.size());
            for (const auto& r : matrix.rows) col.push_back(r.number(s));
            ig = information_gain(col, labels, bins);
        } else {
            std::vector<std::string> col;
            col.reserve(matrix.rows.size());
            for (const auto& r : matrix.rows) col.push_back(r.category(s));
            ig = information_gain(col, labels);
        }
        report.push_back({spec.name, spec.set, ig, ig * 100.0});
    }
    std::stable_sort(report.begin(), report.end(),
                     [](const FeatureImportance& a, const FeatureImportance& b) { return a.ig > b.ig; });
    return report;
}

void write_importance_tsv(const std::vector<FeatureImportance>& report, std::ostream& out, size_t top_n) {
    out << "name\tset\tig\tpercent\n";
    const size_t n = std::min(top_n, report.size());
    char buf[64];
    for (size_t i = 0; i < n; ++i) {
        const auto& r = report[i];
        std::snprintf(buf, sizeof buf, "%.6f\t%.4f", r.ig, r.percent);
        out << r.name << '\t' << to_string(r.set) << '\t' << buf << '\n';
    }
}

}  // namespace factrank
