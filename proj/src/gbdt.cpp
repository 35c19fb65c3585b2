#include "factrank/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "factrank/metrics.hpp"
#include "factrank/util.hpp"

namespace factrank {

std::vector<TrainConfig> default_grid(const TrainConfig& base) {
    std::vector<TrainConfig> grid;
    for (int depth : {6, 10, 15})
        for (double rate : {0.001, 0.01, 0.1, 1.0}) {
            TrainConfig c = base;
            c.max_depth = depth;
            c.learning_rate = rate;
            grid.push_back(c);
        }
    return grid;
}

double RegressionTree::predict(const double* x) const {
    int32_t i = 0;
    while (!nodes[i].leaf()) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
}

size_t RegressionTree::depth() const {
    std::vector<size_t> d(nodes.size(), 0);
    size_t best = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (!nodes[i].leaf()) {
            d[nodes[i].left] = d[i] + 1;
            d[nodes[i].right] = d[i] + 1;
        }
    }
    return best;
}

double Booster::margin(const double* x) const {
    double m = base_score;
    for (const auto& t : trees) m += learning_rate * t.predict(x);
    return m;
}

double logistic(double margin) {
    const double p = 1.0 / (1.0 + std::exp(-margin));
    return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double point_loss(double margin, int label) { return label ? softplus(-margin) : softplus(margin); }

}  // namespace

double log_loss(std::span<const double> margins, std::span<const int> labels) {
    double sum = 0.0;
    for (size_t i = 0; i < margins.size(); ++i) sum += point_loss(margins[i], labels[i]);
    return margins.empty() ? 0.0 : sum / static_cast<double>(margins.size());
}

PresortedMatrix PresortedMatrix::build(const DenseMatrix& X) {
    PresortedMatrix p;
    std::vector<uint32_t> idx(X.rows);
    for (size_t c = 0; c < X.cols; ++c) {
        std::iota(idx.begin(), idx.end(), 0u);
        std::stable_sort(idx.begin(), idx.end(), [&](uint32_t a, uint32_t b) { return X.at(a, c) < X.at(b, c); });
        if (X.rows == 0 || X.at(idx.front(), c) == X.at(idx.back(), c)) continue;
        // Most frequent value; the smallest one on equal counts.
        double fill = X.at(idx[0], c);
        size_t best = 0;
        for (size_t k = 0; k < X.rows;) {
            size_t j = k;
            while (j < X.rows && X.at(idx[j], c) == X.at(idx[k], c)) ++j;
            if (j - k > best) {
                best = j - k;
                fill = X.at(idx[k], c);
            }
            k = j;
        }
        std::vector<uint32_t> ord;
        std::vector<double> vals;
        uint32_t split = 0;
        for (size_t k = 0; k < X.rows; ++k) {
            const double v = X.at(idx[k], c);
            if (v == fill) continue;
            if (v < fill) ++split;
            ord.push_back(idx[k]);
            vals.push_back(v);
        }
        p.columns.push_back(static_cast<uint32_t>(c));
        p.fill.push_back(fill);
        p.order.push_back(std::move(ord));
        p.values.push_back(std::move(vals));
        p.split.push_back(split);
    }
    return p;
}

namespace {

struct NodeStats {
    double g = 0.0;
    double h = 0.0;
    size_t n = 0;
};

struct SplitCandidate {
    double gain = 0.0;
    int32_t feature = -1;
    double threshold = 0.0;
};

struct RowState {
    double g = 0.0;
    double h = 0.0;
    int32_t slot = -1;
};

struct ScanState {
    double gl = 0.0;
    double hl = 0.0;
    size_t nl = 0;
    double last = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const DenseMatrix& X, const PresortedMatrix& data, const TrainConfig& config)
        : X_(X), data_(data), config_(config), n_(X.rows) {}

    // Grows one tree for the given gradients; leaf_of[i] receives the leaf
    // node of every training row.
    RegressionTree build(const std::vector<double>& g, const std::vector<double>& h, std::vector<int32_t>& leaf_of) {
        RegressionTree tree;
        node_of_.assign(n_, 0);
        leaf_of.assign(n_, -1);

        NodeStats root;
        for (size_t i = 0; i < n_; ++i) {
            root.g += g[i];
            root.h += h[i];
        }
        root.n = n_;
        tree.nodes.push_back({});
        std::vector<int32_t> level = {0};
        std::vector<NodeStats> stats = {root};

        // The shared sorted columns are read until rows settle; from then on
        // compacted copies in the builder's own buffers.
        compacted_ = false;
        rows_.resize(n_);
        for (size_t i = 0; i < n_; ++i) rows_[i] = {g[i], h[i], -1};
        size_t active = n_;
        size_t active_at_compaction = n_;

        for (int depth = 0; !level.empty(); ++depth) {
            // Slot per splittable node of this level.
            std::vector<int32_t> slot_of_node(tree.nodes.size(), -1);
            std::vector<int32_t> splittable;
            for (size_t k = 0; k < level.size(); ++k) {
                const auto& s = stats[k];
                if (depth < config_.max_depth && s.n >= 2 * static_cast<size_t>(config_.min_leaf) &&
                    s.h >= 2 * config_.min_child_weight) {
                    slot_of_node[level[k]] = static_cast<int32_t>(splittable.size());
                    splittable.push_back(static_cast<int32_t>(k));
                }
            }

            std::vector<SplitCandidate> best(splittable.size());
            if (!splittable.empty()) {
                for (size_t i = 0; i < n_; ++i) rows_[i].slot = node_of_[i] >= 0 ? slot_of_node[node_of_[i]] : -1;
                find_splits(splittable, stats, best);
            }

            // Materialize children and route rows.
            std::vector<int32_t> next_level;
            std::vector<NodeStats> next_stats;
            std::vector<int32_t> child_left(tree.nodes.size(), -1);
            for (size_t k = 0; k < level.size(); ++k) {
                const int32_t node = level[k];
                const int32_t slot = slot_of_node[node];
                if (slot >= 0 && best[slot].feature >= 0) {
                    auto& nd = tree.nodes[node];
                    nd.feature = best[slot].feature;
                    nd.threshold = best[slot].threshold;
                    nd.left = static_cast<int32_t>(tree.nodes.size());
                    nd.right = nd.left + 1;
                    tree.nodes.push_back({});
                    tree.nodes.push_back({});
                    child_left[node] = nd.left;
                    next_level.push_back(nd.left);
                    next_level.push_back(nd.left + 1);
                    next_stats.push_back({});
                    next_stats.push_back({});
                } else {
                    const auto& s = stats[k];
                    tree.nodes[node].value = -s.g / (s.h + config_.lambda);
                }
            }
            std::vector<int32_t> child_slot(tree.nodes.size(), -1);
            for (size_t k = 0; k < next_level.size(); ++k) child_slot[next_level[k]] = static_cast<int32_t>(k);

            const DenseMatrix& X = X_;
            for (size_t i = 0; i < n_; ++i) {
                const int32_t node = node_of_[i];
                if (node < 0) continue;
                if (child_left[node] < 0) {
                    leaf_of[i] = node;
                    node_of_[i] = -1;
                    --active;
                    continue;
                }
                const auto& nd = tree.nodes[node];
                const int32_t child = X.at(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
                node_of_[i] = child;
                auto& cs = next_stats[child_slot[child]];
                cs.g += g[i];
                cs.h += h[i];
                ++cs.n;
            }
            level = std::move(next_level);
            stats = std::move(next_stats);

            if (!level.empty() && active * 2 < active_at_compaction) {
                compact();
                active_at_compaction = active;
            }
        }
        return tree;
    }

private:
    // Rows holding a column's fill value are not stored. Entries below the
    // fill are scanned forward with left sums, entries above it backward
    // with right sums; the fill block is whatever the node total leaves.
    void find_splits(const std::vector<int32_t>& splittable, const std::vector<NodeStats>& stats,
                     std::vector<SplitCandidate>& best) {
        const auto& order = compacted_ ? order_ : data_.order;
        const auto& values = compacted_ ? values_ : data_.values;
        const auto& split = compacted_ ? split_ : data_.split;
        const RowState* rows = rows_.data();
        const size_t m = splittable.size();
        std::vector<ScanState> lo(m), hi(m);
        std::vector<double> parent_score(m);
        std::vector<const NodeStats*> node(m);
        for (size_t s = 0; s < m; ++s) {
            node[s] = &stats[splittable[s]];
            parent_score[s] = node[s]->g * node[s]->g / (node[s]->h + config_.lambda);
            best[s].gain = kMinGain;
        }
        const double lambda = config_.lambda;
        const size_t min_leaf = static_cast<size_t>(config_.min_leaf);
        const double mcw = config_.min_child_weight;

        // One side's sums are given; the other is the node total minus them.
        auto consider = [&](size_t s, double gs, double hs, size_t ns, int32_t feature, double a, double b) {
            const NodeStats& st = *node[s];
            const size_t no = st.n - ns;
            const double ho = st.h - hs;
            if (ns < min_leaf || no < min_leaf || hs < mcw || ho < mcw) return;
            const double go = st.g - gs;
            const double gain = gs * gs / (hs + lambda) + go * go / (ho + lambda) - parent_score[s];
            if (gain > best[s].gain) {
                double mid = a + (b - a) / 2.0;
                if (!(mid < b)) mid = a;
                best[s] = {gain, feature, mid};
            }
        };

        for (size_t c = 0; c < order.size(); ++c) {
            std::fill(lo.begin(), lo.end(), ScanState{});
            std::fill(hi.begin(), hi.end(), ScanState{});
            const auto& ord = order[c];
            const auto& val = values[c];
            const int32_t feature = static_cast<int32_t>(data_.columns[c]);
            const double fill = data_.fill[c];
            const size_t mid = split[c];

            for (size_t k = 0; k < mid; ++k) {
                const RowState& row = rows[ord[k]];
                const int32_t s = row.slot;
                if (s < 0) continue;
                auto& sc = lo[s];
                const double v = val[k];
                if (sc.nl > 0 && v != sc.last) consider(s, sc.gl, sc.hl, sc.nl, feature, sc.last, v);
                sc.gl += row.g;
                sc.hl += row.h;
                ++sc.nl;
                sc.last = v;
            }
            for (size_t k = ord.size(); k-- > mid;) {
                const RowState& row = rows[ord[k]];
                const int32_t s = row.slot;
                if (s < 0) continue;
                auto& sc = hi[s];
                const double v = val[k];
                if (sc.nl > 0 && v != sc.last) consider(s, sc.gl, sc.hl, sc.nl, feature, v, sc.last);
                sc.gl += row.g;
                sc.hl += row.h;
                ++sc.nl;
                sc.last = v;
            }
            for (size_t s = 0; s < m; ++s) {
                const auto& a = lo[s];
                const auto& b = hi[s];
                const bool has_fill = node[s]->n > a.nl + b.nl;
                if (has_fill) {
                    if (a.nl > 0) consider(s, a.gl, a.hl, a.nl, feature, a.last, fill);
                    if (b.nl > 0) consider(s, b.gl, b.hl, b.nl, feature, fill, b.last);
                } else if (a.nl > 0 && b.nl > 0) {
                    consider(s, a.gl, a.hl, a.nl, feature, a.last, b.last);
                }
            }
        }
    }

    void compact() {
        const auto& src_order = compacted_ ? order_ : data_.order;
        const auto& src_values = compacted_ ? values_ : data_.values;
        const auto& src_split = compacted_ ? split_ : data_.split;
        const size_t cols = src_order.size();
        order_.resize(cols);
        values_.resize(cols);
        split_.resize(cols);
        for (size_t c = 0; c < cols; ++c) {
            const auto& so = src_order[c];
            const auto& sv = src_values[c];
            auto& o = order_[c];
            auto& v = values_[c];
            // In place when compacting our own buffers; w never passes k.
            if (!compacted_) {
                o.resize(so.size());
                v.resize(sv.size());
            }
            size_t w = 0;
            uint32_t below = 0;
            const size_t len = so.size();
            const size_t mid = src_split[c];
            for (size_t k = 0; k < len; ++k) {
                const uint32_t i = so[k];
                if (node_of_[i] < 0) continue;
                if (k < mid) ++below;
                o[w] = i;
                v[w] = sv[k];
                ++w;
            }
            o.resize(w);
            v.resize(w);
            split_[c] = below;
        }
        compacted_ = true;
    }

    static constexpr double kMinGain = 1e-12;

    const DenseMatrix& X_;
    const PresortedMatrix& data_;
    const TrainConfig& config_;
    size_t n_;
    std::vector<int32_t> node_of_;
    std::vector<RowState> rows_;
    bool compacted_ = false;
    std::vector<std::vector<uint32_t>> order_;
    std::vector<std::vector<double>> values_;
    std::vector<uint32_t> split_;
};

void check_config(const TrainConfig& c) {
    if (c.max_depth < 0) throw Error("bad_config", "max_depth must be non-negative");
    if (!(c.learning_rate > 0.0)) throw Error("bad_config", "learning_rate must be positive");
    if (c.num_rounds < 0) throw Error("bad_config", "num_rounds must be non-negative");
    if (c.min_leaf < 1) throw Error("bad_config", "min_leaf must be positive");
    if (c.lambda < 0.0) throw Error("bad_config", "lambda must be non-negative");
}

}  // namespace

Booster fit_booster(const DenseMatrix& X, const PresortedMatrix& sorted, std::span<const int> labels,
                    const TrainConfig& config, const DenseMatrix* valid, std::span<const int> valid_labels,
                    TrainTrace* trace) {
    check_config(config);
    const size_t n = X.rows;
    if (labels.size() != n) throw Error("length_mismatch", "labels and rows differ in length");
    if (n < 2) throw Error("too_few_rows", "training needs at least 2 examples");
    const size_t positives = static_cast<size_t>(std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; }));
    if (positives == 0 || positives == n) throw Error("degenerate_labels", "degenerate labels: only one class present");
    if (valid && valid_labels.size() != valid->rows) throw Error("length_mismatch", "validation labels and rows differ");

    Booster model;
    const double prior = static_cast<double>(positives) / static_cast<double>(n);
    model.base_score = std::log(prior / (1.0 - prior));
    model.learning_rate = config.learning_rate;

    std::vector<double> margin(n, model.base_score), trial(n);
    std::vector<double> g(n), h(n);
    std::vector<int32_t> leaf_of;
    double loss = log_loss(margin, labels);

    std::vector<double> vmargin;
    double best_vloss = std::numeric_limits<double>::infinity();
    size_t best_round = 0;
    if (valid) {
        vmargin.assign(valid->rows, model.base_score);
        best_vloss = log_loss(vmargin, valid_labels);
    }
    TrainTrace local;
    TrainTrace& tr = trace ? *trace : local;
    tr = {};
    tr.train_loss.push_back(loss);
    if (valid) tr.valid_loss.push_back(best_vloss);

    TreeBuilder builder(X, sorted, config);
    for (int round = 0; round < config.num_rounds; ++round) {
        for (size_t i = 0; i < n; ++i) {
            const double p = 1.0 / (1.0 + std::exp(-margin[i]));
            g[i] = p - (labels[i] ? 1.0 : 0.0);
            h[i] = std::max(p * (1.0 - p), 1e-16);
        }
        RegressionTree tree = builder.build(g, h, leaf_of);

        // Halve the step until the training loss does not increase.
        double scale = 1.0;
        double new_loss = loss;
        bool accepted = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            for (size_t i = 0; i < n; ++i)
                trial[i] = margin[i] + config.learning_rate * (tree.nodes[leaf_of[i]].value * scale);
            new_loss = log_loss(trial, labels);
            if (new_loss <= loss) {
                accepted = true;
                break;
            }
            scale /= 2.0;
        }
        if (!accepted) {
            scale = 0.0;
            new_loss = loss;
        }
        for (auto& nd : tree.nodes) nd.value *= scale;
        for (size_t i = 0; i < n; ++i) margin[i] += config.learning_rate * tree.nodes[leaf_of[i]].value;
        loss = log_loss(margin, labels);
        tr.train_loss.push_back(loss);
        tr.step_scale.push_back(scale);

        if (valid) {
            for (size_t i = 0; i < valid->rows; ++i) vmargin[i] += config.learning_rate * tree.predict(valid->row(i));
            const double vloss = log_loss(vmargin, valid_labels);
            tr.valid_loss.push_back(vloss);
            model.trees.push_back(std::move(tree));
            if (vloss < best_vloss) {
                best_vloss = vloss;
                best_round = model.trees.size();
            } else if (static_cast<int>(model.trees.size() - best_round) >= config.patience) {
                break;
            }
        } else {
            model.trees.push_back(std::move(tree));
        }
    }
    if (valid) model.trees.resize(best_round);
    tr.best_round = model.trees.size();
    return model;
}

void FakenessModel::check_schema(const FeatureSchema& schema) const {
    if (schema.checksum() != manifest_checksum)
        throw Error("manifest_mismatch", "feature manifest checksum " + to_hex64(schema.checksum()) +
                                             " does not match the model's " + to_hex64(manifest_checksum));
}

double FakenessModel::margin(const FeatureVector& row) const {
    FeatureVector scaled = row;
    normalizer.apply(scaled);
    std::vector<double> x(encoder.width());
    encoder.encode(scaled, x.data());
    return booster.margin(x.data());
}

double FakenessModel::predict(const FeatureVector& row) const { return logistic(margin(row)); }

std::vector<double> FakenessModel::margins(const FeatureMatrix& matrix) const {
    check_schema(matrix.schema);
    std::vector<double> out;
    out.reserve(matrix.rows.size());
    for (const auto& r : matrix.rows) out.push_back(margin(r));
    return out;
}

std::vector<double> FakenessModel::predict(const FeatureMatrix& matrix) const {
    auto m = margins(matrix);
    for (auto& v : m) v = logistic(v);
    return m;
}

SplitData SplitData::prepare(const FeatureSchema& schema, std::span<const FeatureVector> train,
                             std::span<const FeatureVector> valid) {
    SplitData d;
    d.manifest_checksum = schema.checksum();
    d.normalizer = Normalizer::fit(schema, train);
    const auto scaled = d.normalizer.apply(train);
    d.encoder = CategoricalEncoder::fit(schema, scaled);
    d.train = d.encoder.encode(scaled);
    for (const auto& r : train) d.train_labels.push_back(r.label);
    d.presorted = PresortedMatrix::build(d.train);
    const auto vscaled = d.normalizer.apply(valid);
    d.valid = d.encoder.encode(vscaled);
    for (const auto& r : valid) {
        d.valid_labels.push_back(r.label);
        d.valid_ids.push_back(r.story_id);
    }
    return d;
}

FakenessModel train_model(const SplitData& data, const TrainConfig& config, TrainTrace* trace, int64_t trained_at) {
    FakenessModel m;
    m.manifest_checksum = data.manifest_checksum;
    m.config = config;
    m.trained_at = trained_at;
    m.normalizer = data.normalizer;
    m.encoder = data.encoder;
    const bool has_valid = data.valid.rows > 0;
    m.booster = fit_booster(data.train, data.presorted, data.train_labels, config, has_valid ? &data.valid : nullptr,
                            data.valid_labels, trace);
    return m;
}

FakenessModel train_model(const FeatureMatrix& train, const TrainConfig& config, const FeatureMatrix* valid,
                          TrainTrace* trace, int64_t trained_at) {
    if (valid && valid->schema.checksum() != train.schema.checksum())
        throw Error("manifest_mismatch", "train and validation manifests differ");
    const std::vector<FeatureVector> none;
    const SplitData data = SplitData::prepare(train.schema, train.rows, valid ? valid->rows : none);
    return train_model(data, config, trace, trained_at);
}

GridResult grid_search(const SplitData& data, std::span<const TrainConfig> grid, int64_t trained_at) {
    if (grid.empty()) throw Error("empty_grid", "grid search needs at least one configuration");
    if (data.valid.rows == 0) throw Error("empty_split", "grid search needs a validation split");

    // Deepest first within each group of otherwise equal configs: when no
    // tree of a deeper model reaches a smaller limit, that limit never
    // binds and the smaller-depth model is the same model.
    std::vector<size_t> train_order(grid.size());
    std::iota(train_order.begin(), train_order.end(), size_t{0});
    auto same_but_depth = [](TrainConfig a, const TrainConfig& b) {
        a.max_depth = b.max_depth;
        return a == b;
    };
    std::stable_sort(train_order.begin(), train_order.end(),
                     [&](size_t a, size_t b) { return grid[a].max_depth > grid[b].max_depth; });

    std::vector<FakenessModel> models(grid.size());
    std::vector<double> ndcg(grid.size()), loss(grid.size());
    std::vector<bool> done(grid.size(), false);
    std::vector<double> vm(data.valid.rows);
    std::vector<int> rel(data.valid.rows);
    for (size_t gi : train_order) {
        if (done[gi]) continue;
        FakenessModel m = train_model(data, grid[gi], nullptr, trained_at);
        size_t reached = 0;
        for (const auto& t : m.booster.trees) reached = std::max(reached, t.depth());
        for (size_t i = 0; i < data.valid.rows; ++i) vm[i] = m.booster.margin(data.valid.row(i));
        const auto order = rank_order(vm, data.valid_ids);
        for (size_t r = 0; r < order.size(); ++r) rel[r] = data.valid_labels[order[r]];
        const double score = ndcg_at_k(rel, 10);
        const double vloss = log_loss(vm, data.valid_labels);
        for (size_t other : train_order) {
            if (done[other] || !same_but_depth(grid[other], grid[gi])) continue;
            if (other != gi && static_cast<size_t>(std::max(grid[other].max_depth, 0)) < reached) continue;
            models[other] = m;
            models[other].config = grid[other];
            ndcg[other] = score;
            loss[other] = vloss;
            done[other] = true;
        }
    }

    // Strict improvement in (depth, rate) order implements the tie rule.
    std::vector<size_t> visit(grid.size());
    std::iota(visit.begin(), visit.end(), size_t{0});
    std::stable_sort(visit.begin(), visit.end(), [&](size_t a, size_t b) {
        if (grid[a].max_depth != grid[b].max_depth) return grid[a].max_depth < grid[b].max_depth;
        return grid[a].learning_rate < grid[b].learning_rate;
    });
    GridResult result;
    std::optional<size_t> best;
    for (size_t gi : visit) {
        result.points.push_back({grid[gi], ndcg[gi], loss[gi]});
        if (!best || ndcg[gi] > ndcg[*best]) best = gi;
    }
    result.best = grid[*best];
    result.best_ndcg10 = ndcg[*best];
    result.model = std::move(models[*best]);
    return result;
}

GridResult grid_search(const FeatureMatrix& train, const FeatureMatrix& valid, std::span<const TrainConfig> grid,
                       int64_t trained_at) {
    if (valid.schema.checksum() != train.schema.checksum())
        throw Error("manifest_mismatch", "train and validation manifests differ");
    const SplitData data = SplitData::prepare(train.schema, train.rows, valid.rows);
    return grid_search(data, grid, trained_at);
}

}  // namespace factrank
