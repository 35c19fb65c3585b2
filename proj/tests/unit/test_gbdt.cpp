#include <doctest.h>

#include <cmath>

#include "factrank/gbdt.hpp"
#include "factrank/metrics.hpp"
#include "factrank/model_io.hpp"
#include "factrank/util.hpp"
#include "support.hpp"

using namespace factrank;

namespace {

struct Toy {
    DenseMatrix X;
    std::vector<int> y;
};

Toy separable() {
    Toy t;
    t.X.cols = 1;
    Rng r(1);
    for (int i = 0; i < 100; ++i) {
        const int label = i % 2;
        const double x = (label ? 1.0 : -1.0) * (0.1 + r.uniform() * 3.0);
        t.X.data.push_back(x);
        t.y.push_back(label);
    }
    t.X.rows = t.y.size();
    return t;
}

// XOR with unequal quadrant sizes, so that the first split has a positive gain.
Toy xor_data() {
    Toy t;
    t.X.cols = 2;
    Rng r(2);
    const struct {
        double sx, sy;
        int label, count;
    } quads[] = {{-1, -1, 0, 30}, {1, 1, 0, 20}, {-1, 1, 1, 25}, {1, -1, 1, 25}};
    for (const auto& q : quads)
        for (int i = 0; i < q.count; ++i) {
            t.X.data.push_back(q.sx * (0.2 + r.uniform()));
            t.X.data.push_back(q.sy * (0.2 + r.uniform()));
            t.y.push_back(q.label);
        }
    t.X.rows = t.y.size();
    return t;
}

Booster fit(const Toy& t, int depth, double rate, int rounds, TrainTrace* trace = nullptr) {
    TrainConfig c;
    c.max_depth = depth;
    c.learning_rate = rate;
    c.num_rounds = rounds;
    return fit_booster(t.X, PresortedMatrix::build(t.X), t.y, c, nullptr, {}, trace);
}

double accuracy(const Booster& b, const Toy& t) {
    size_t ok = 0;
    for (size_t i = 0; i < t.X.rows; ++i) ok += (logistic(b.margin(t.X.row(i))) >= 0.5) == (t.y[i] == 1);
    return static_cast<double>(ok) / t.X.rows;
}

void check_non_increasing(const TrainTrace& trace) {
    for (size_t i = 1; i < trace.train_loss.size(); ++i) CHECK(trace.train_loss[i] <= trace.train_loss[i - 1]);
}

FeatureMatrix small_corpus(uint64_t seed = 1, size_t stories = 400) {
    SyntheticSpec spec;
    spec.stories = stories;
    spec.seed = seed;
    spec.fake_fraction = 0.05;
    return testing::synthetic_matrix(spec);
}

}  // namespace

TEST_SUITE("gbdt") {

TEST_CASE("zero-tree model with base 0 predicts one half") {
    Booster b;
    const double x = 1.0;
    CHECK(logistic(b.margin(&x)) == 0.5);
}

TEST_CASE("separable toy set") {
    const auto t = separable();
    TrainTrace trace;
    const auto b = fit(t, 2, 0.1, 50, &trace);
    CHECK(accuracy(b, t) == 1.0);
    const double deep = 3.0;
    CHECK(logistic(b.margin(&deep)) > 0.9);
    check_non_increasing(trace);
}

TEST_CASE("xor needs depth two") {
    const auto t = xor_data();
    TrainTrace t1, t2;
    const auto stumps = fit(t, 1, 0.1, 100, &t1);
    const auto deep = fit(t, 2, 0.1, 100, &t2);
    CHECK(accuracy(stumps, t) <= 0.75);
    CHECK(accuracy(deep, t) == 1.0);
    check_non_increasing(t1);
    check_non_increasing(t2);
}

TEST_CASE("single-class labels are rejected") {
    auto t = separable();
    std::fill(t.y.begin(), t.y.end(), 1);
    CHECK_THROWS_AS(fit(t, 2, 0.1, 5), Error);
}

TEST_CASE("training loss never increases, even at rate 1") {
    const auto m = small_corpus();
    for (double rate : {0.001, 0.1, 1.0})
        for (int depth : {1, 6, 15}) {
            TrainConfig c;
            c.max_depth = depth;
            c.learning_rate = rate;
            c.num_rounds = 40;
            TrainTrace trace;
            train_model(m, c, nullptr, &trace);
            CHECK(trace.train_loss.size() == 41);
            check_non_increasing(trace);
        }
}

TEST_CASE("predictions stay inside the open unit interval") {
    const auto m = small_corpus();
    TrainConfig c;
    c.learning_rate = 1.0;
    c.num_rounds = 100;
    const auto model = train_model(m, c);
    for (double p : model.predict(m)) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("fixed seed reproduces model bytes") {
    const auto m = small_corpus();
    TrainConfig c;
    c.num_rounds = 30;
    c.seed = 5;
    CHECK(serialize_model(train_model(m, c)) == serialize_model(train_model(m, c)));
}

TEST_CASE("early stopping keeps the best validation round") {
    const auto train = small_corpus(1);
    const auto valid = small_corpus(2, 200);
    TrainConfig c;
    c.learning_rate = 1.0;
    c.num_rounds = 200;
    TrainTrace trace;
    const auto model = train_model(train, c, &valid, &trace);
    CHECK(model.booster.trees.size() == trace.best_round);
    CHECK(trace.best_round < 200);
    const auto best = std::min_element(trace.valid_loss.begin(), trace.valid_loss.end());
    CHECK(static_cast<size_t>(best - trace.valid_loss.begin()) == trace.best_round);
}

TEST_CASE("scores are pointwise") {
    const auto m = small_corpus();
    TrainConfig c;
    c.num_rounds = 20;
    const auto model = train_model(m, c);
    auto reversed = m;
    std::reverse(reversed.rows.begin(), reversed.rows.end());
    const auto a = model.predict(m);
    const auto b = model.predict(reversed);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[a.size() - 1 - i]);
}

TEST_CASE("model rejects a foreign manifest") {
    const auto m = small_corpus();
    TrainConfig c;
    c.num_rounds = 5;
    const auto model = train_model(m, c);
    FeatureMatrix other{FeatureSchema({{"x", FeatureFamily::content, FeatureSet::lexical, FeatureKind::numeric}}), {}};
    CHECK_THROWS_AS(model.margins(other), Error);
}

TEST_CASE("grid search runs over the twelve-point default grid") {
    const auto train = small_corpus(1);
    const auto valid = small_corpus(2, 200);
    TrainConfig base;
    base.num_rounds = 20;
    const auto grid = default_grid(base);
    REQUIRE(grid.size() == 12);
    const auto res = grid_search(train, valid, grid);
    CHECK(res.points.size() == 12);
    CHECK(std::find(grid.begin(), grid.end(), res.best) != grid.end());
    CHECK(res.model.config == res.best);
    double best = 0;
    for (const auto& p : res.points) best = std::max(best, p.ndcg10);
    CHECK(res.best_ndcg10 == best);
}

TEST_CASE("one-point grid and empty grid") {
    const auto train = small_corpus(1);
    const auto valid = small_corpus(2, 200);
    TrainConfig c;
    c.max_depth = 3;
    c.num_rounds = 10;
    const std::vector<TrainConfig> one = {c};
    CHECK(grid_search(train, valid, one).best == c);
    CHECK_THROWS_AS(grid_search(train, valid, std::vector<TrainConfig>{}), Error);
}

TEST_CASE("equal validation NDCG goes to the smaller depth, then the smaller rate") {
    // One separable feature: every config ranks the validation set perfectly.
    const FeatureSchema schema({{"signal", FeatureFamily::environment, FeatureSet::external_propagation,
                                 FeatureKind::numeric}});
    FeatureMatrix train{schema, {}}, valid{schema, {}};
    for (int i = 0; i < 60; ++i) train.rows.push_back({"t" + std::to_string(i), {double(i % 3 == 0) + i * 1e-3}, i % 3 == 0});
    for (int i = 0; i < 30; ++i) valid.rows.push_back({"v" + std::to_string(i), {double(i % 5 == 0) + i * 1e-3}, i % 5 == 0});
    TrainConfig a, b, c;
    a.max_depth = 10;
    a.learning_rate = 0.1;
    b.max_depth = 6;
    b.learning_rate = 1.0;
    c.max_depth = 6;
    c.learning_rate = 0.1;
    for (auto* x : {&a, &b, &c}) x->num_rounds = 30;
    const std::vector<TrainConfig> grid = {a, b, c};
    const auto res = grid_search(train, valid, grid);
    bool all_equal = true;
    for (const auto& p : res.points) all_equal &= p.ndcg10 == res.points.front().ndcg10;
    REQUIRE(all_equal);
    CHECK(res.best == c);
}

TEST_CASE("depth reuse in grid search matches training each point alone") {
    const auto train = small_corpus(3);
    const auto valid = small_corpus(4, 200);
    TrainConfig base;
    base.num_rounds = 25;
    const auto grid = default_grid(base);
    const auto data = SplitData::prepare(train.schema, train.rows, valid.rows);
    const auto res = grid_search(data, grid);
    const auto alone = train_model(data, res.best);
    CHECK(serialize_model(alone) == serialize_model(res.model));
}

TEST_CASE("z-scoring absorbs positive rescaling of a slot") {
    const auto m = small_corpus();
    auto scaled = m;
    const size_t slot = m.schema.require("count_web_dissemination_urls");
    for (auto& r : scaled.rows) r.values[slot] = r.number(slot) * 3.0;
    TrainConfig c;
    c.num_rounds = 30;
    const auto a = train_model(m, c).margins(m);
    const auto b = train_model(scaled, c).margins(scaled);
    std::vector<std::string> ids;
    for (const auto& r : m.rows) ids.push_back(r.story_id);
    CHECK(rank_order(a, ids) == rank_order(b, ids));
}

}
