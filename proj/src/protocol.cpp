#include "factrank/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <boost/math/distributions/students_t.hpp>

#include "factrank/util.hpp"

namespace factrank {

std::vector<size_t> FoldPlan::train(size_t fold) const {
    const size_t k = portions.size();
    std::vector<size_t> out;
    for (size_t p = 0; p < k; ++p) {
        if (p == fold % k || p == (fold + 1) % k) continue;
        out.insert(out.end(), portions[p].begin(), portions[p].end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

FoldPlan stratified_folds(std::span<const int> labels, size_t k, uint64_t seed) {
    if (k < 2) throw Error("bad_folds", "need at least 2 folds");
    std::vector<size_t> fakes, others;
    for (size_t i = 0; i < labels.size(); ++i) (labels[i] ? fakes : others).push_back(i);
    if (fakes.size() < k || others.size() < k)
        throw Error("too_few_examples", "each class needs at least " + std::to_string(k) + " examples for " +
                                            std::to_string(k) + "-fold stratification");
    Rng rng(seed);
    rng.shuffle(fakes);
    rng.shuffle(others);
    FoldPlan plan;
    plan.portions.resize(k);
    for (size_t i = 0; i < fakes.size(); ++i) plan.portions[i % k].push_back(fakes[i]);
    const size_t start = fakes.size() % k;
    for (size_t i = 0; i < others.size(); ++i) plan.portions[(start + i) % k].push_back(others[i]);
    for (auto& p : plan.portions) std::sort(p.begin(), p.end());
    return plan;
}

size_t stratified_fake_count(size_t size, size_t fakes, size_t total) {
    if (total == 0 || size == 0) return 0;
    size_t count = (2 * size * fakes + total) / (2 * total);
    if (size >= 2) count = std::clamp<size_t>(count, 1, size - 1);
    return count;
}

std::vector<std::vector<size_t>> bootstrap_samples(std::span<const size_t> portion, std::span<const int> labels,
                                                   size_t n, size_t size, uint64_t seed) {
    std::vector<size_t> fakes, others;
    for (size_t i : portion) (labels[i] ? fakes : others).push_back(i);
    if (fakes.empty() || others.empty())
        throw Error("empty_class", "bootstrap needs both classes in the test portion");
    const size_t nf = stratified_fake_count(size, fakes.size(), portion.size());
    Rng rng(seed);
    std::vector<std::vector<size_t>> samples(n);
    for (auto& s : samples) {
        s.reserve(size);
        for (size_t i = 0; i < nf; ++i) s.push_back(fakes[rng.below(fakes.size())]);
        for (size_t i = nf; i < size; ++i) s.push_back(others[rng.below(others.size())]);
    }
    return samples;
}

double mean_of(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

namespace {

double sample_variance(std::span<const double> v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

uint64_t derive_seed(uint64_t seed, uint64_t stream) { return fnv1a64(std::to_string(seed) + "/" + std::to_string(stream)); }

}  // namespace

double ci95_half_width(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    return 1.96 * std::sqrt(sample_variance(v, mean_of(v))) / std::sqrt(static_cast<double>(v.size()));
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw Error("too_few_values", "t-test needs at least 2 values per group");
    const double ma = mean_of(a), mb = mean_of(b);
    const double va = sample_variance(a, ma) / static_cast<double>(a.size());
    const double vb = sample_variance(b, mb) / static_cast<double>(b.size());
    WelchResult r;
    const double se2 = va + vb;
    if (!(se2 > 0.0)) {
        r.p = ma == mb ? 1.0 : 0.0;
        r.t = ma == mb ? 0.0 : std::copysign(INFINITY, ma - mb);
        return r;
    }
    r.t = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 /
           (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    boost::math::students_t dist(r.df);
    r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))));
    return r;
}

const MetricSummary& EvaluationReport::get(Strategy method, std::string_view metric, size_t k) const {
    for (const auto& r : rows)
        if (r.method == method && r.metric == metric && r.k == k) return r;
    throw Error("not_found", "no report row for " + to_string(method) + " " + std::string(metric) + "@" +
                                 std::to_string(k));
}

double EvaluationReport::effort_of(Strategy method) const {
    for (size_t m = 0; m < methods.size(); ++m)
        if (methods[m] == method) return effort[m];
    throw Error("not_found", "method " + to_string(method) + " was not evaluated");
}

void EvaluationReport::write_tsv(std::ostream& out) const {
    out << "method\tmetric\tk\tmean\tci95\tbold\n";
    char buf[96];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6f\t%.6f", r.mean, r.ci95);
        out << to_string(r.method) << '\t' << r.metric << '\t' << r.k << '\t' << buf << '\t' << (r.bold ? 1 : 0)
            << '\n';
    }
    const double best = effort.empty() ? 0.0 : *std::min_element(effort.begin(), effort.end());
    for (size_t m = 0; m < methods.size(); ++m) {
        std::snprintf(buf, sizeof buf, "%.6f\t0.000000", effort[m]);
        char target[32];
        std::snprintf(target, sizeof target, "%g", recall_target);
        out << to_string(methods[m]) << "\teffort_to_recall\t" << target << '\t' << buf << '\t'
            << (effort[m] == best ? 1 : 0) << '\n';
    }
}

void EvaluationReport::write_curves_csv(std::ostream& out) const {
    out << "method,x,y\n";
    char buf[64];
    for (size_t m = 0; m < methods.size(); ++m)
        for (const auto& p : curves[m]) {
            std::snprintf(buf, sizeof buf, "%.6f,%.6f", p.inspected, p.recovered);
            out << to_string(methods[m]) << ',' << buf << '\n';
        }
}

EvaluationReport run_experiment(const FeatureMatrix& matrix, const ExperimentOptions& options) {
    if (options.methods.empty()) throw Error("bad_options", "no methods to evaluate");
    if (options.ks.empty()) throw Error("bad_options", "no cutoffs to evaluate");
    const auto labels = matrix.labels();
    const FoldPlan plan = stratified_folds(labels, options.folds, derive_seed(options.seed, 0));

    const size_t nm = options.methods.size();
    const size_t nk = options.ks.size();
    // values[method][metric][k] across executions
    std::vector<std::vector<std::vector<std::vector<double>>>> values(
        nm, std::vector<std::vector<std::vector<double>>>(3, std::vector<std::vector<double>>(nk)));
    std::vector<std::vector<double>> curve_sum(nm, std::vector<double>(options.sample_size + 1, 0.0));

    EvaluationReport report;
    report.methods = options.methods;
    report.recall_target = options.recall_target;

    auto subset = [&](const std::vector<size_t>& idx) {
        FeatureMatrix m;
        m.schema = matrix.schema;
        m.rows.reserve(idx.size());
        for (size_t i : idx) m.rows.push_back(matrix.rows[i]);
        return m;
    };

    std::vector<int> rel(options.sample_size);
    for (size_t f = 0; f < plan.size(); ++f) {
        const auto train_idx = plan.train(f);
        const auto& valid_idx = plan.validation(f);
        const auto& test_idx = plan.test(f);
        const FeatureMatrix test = subset(test_idx);

        std::vector<std::vector<double>> keys(nm);
        for (size_t m = 0; m < nm; ++m) {
            if (options.methods[m] != Strategy::fakeness) {
                keys[m] = strategy_keys(test, options.methods[m], nullptr);
                continue;
            }
            const FeatureMatrix train = subset(train_idx);
            const FeatureMatrix valid = subset(valid_idx);
            const SplitData data = SplitData::prepare(matrix.schema, train.rows, valid.rows);
            GridResult grid = grid_search(data, options.grid);
            report.folds.push_back({grid.best, grid.best_ndcg10, grid.model.booster.trees.size()});
            keys[m] = grid.model.margins(test);
        }

        // Rank position of every test row per method; a bootstrap sample is
        // ranked by sorting its members on these positions.
        std::vector<std::string> ids;
        for (const auto& r : test.rows) ids.push_back(r.story_id);
        std::vector<std::vector<size_t>> position(nm, std::vector<size_t>(test_idx.size()));
        for (size_t m = 0; m < nm; ++m) {
            const auto order = rank_order(keys[m], ids);
            for (size_t r = 0; r < order.size(); ++r) position[m][order[r]] = r;
        }

        std::vector<size_t> local(test_idx.size());
        std::iota(local.begin(), local.end(), size_t{0});
        const auto samples = bootstrap_samples(local, test.labels(), options.samples, options.sample_size,
                                               derive_seed(options.seed, 1 + f));
        for (const auto& sample : samples) {
            ++report.executions;
            for (size_t m = 0; m < nm; ++m) {
                std::vector<size_t> ranked = sample;
                std::sort(ranked.begin(), ranked.end(),
                          [&](size_t a, size_t b) { return position[m][a] < position[m][b]; });
                rel.resize(ranked.size());
                for (size_t r = 0; r < ranked.size(); ++r) rel[r] = test.rows[ranked[r]].label;
                for (size_t ki = 0; ki < nk; ++ki) {
                    const size_t k = options.ks[ki];
                    values[m][0][ki].push_back(precision_at_k(rel, k));
                    values[m][1][ki].push_back(recall_at_k(rel, k));
                    values[m][2][ki].push_back(ndcg_at_k(rel, k));
                }
                const auto curve = cost_curve(rel);
                for (size_t p = 0; p < curve.size(); ++p) curve_sum[m][p] += curve[p].recovered;
            }
        }
    }

    static const char* kMetricNames[3] = {"precision", "recall", "ndcg"};
    for (size_t metric = 0; metric < 3; ++metric) {
        for (size_t ki = 0; ki < nk; ++ki) {
            size_t best = 0;
            for (size_t m = 1; m < nm; ++m)
                if (mean_of(values[m][metric][ki]) > mean_of(values[best][metric][ki])) best = m;
            for (size_t m = 0; m < nm; ++m) {
                MetricSummary s;
                s.method = options.methods[m];
                s.metric = kMetricNames[metric];
                s.k = options.ks[ki];
                s.values = values[m][metric][ki];
                s.mean = mean_of(s.values);
                s.ci95 = ci95_half_width(s.values);
                const auto& top = values[best][metric][ki];
                if (m == best)
                    s.bold = true;
                else if (s.values.size() < 2 || top.size() < 2)
                    s.bold = s.mean == mean_of(top);
                else
                    s.bold = welch_t_test(s.values, top).p >= options.alpha;
                report.rows.push_back(std::move(s));
            }
        }
    }

    const double execs = static_cast<double>(report.executions);
    for (size_t m = 0; m < nm; ++m) {
        std::vector<CurvePoint> curve;
        for (size_t p = 0; p < curve_sum[m].size(); ++p)
            curve.push_back({static_cast<double>(p) / static_cast<double>(options.sample_size), curve_sum[m][p] / execs});
        report.effort.push_back(effort_to_recall(curve, options.recall_target));
        report.curves.push_back(std::move(curve));
    }
    return report;
}

}  // namespace factrank
