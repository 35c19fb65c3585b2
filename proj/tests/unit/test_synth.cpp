#include <doctest.h>

#include "factrank/synth.hpp"
#include "factrank/util.hpp"
#include "support.hpp"

using namespace factrank;

TEST_SUITE("synth") {

TEST_CASE("story and fake counts echo the spec") {
    SyntheticSpec spec;
    spec.stories = 1000;
    spec.fake_fraction = 0.03;
    spec.seed = 7;
    const auto c = generate_synthetic(spec);
    CHECK(c.story_hashes.size() == 1000);
    CHECK(std::count(c.story_labels.begin(), c.story_labels.end(), 1) == 30);
    CHECK(c.labels.size() == 30);
    const auto res = assemble_records(c.messages, c.labels);
    CHECK(res.stories.size() == 1000);
    CHECK(res.labels.matched == 30);
    for (size_t i = 1; i < c.messages.size(); ++i) CHECK(c.messages[i - 1].timestamp <= c.messages[i].timestamp);
}

TEST_CASE("same seed gives byte-identical files") {
    testing::TempDir dir("synth");
    SyntheticSpec spec;
    spec.stories = 200;
    write_synthetic(generate_synthetic(spec), dir / "a");
    write_synthetic(generate_synthetic(spec), dir / "b");
    CHECK(testing::slurp(dir / "a/messages.jsonl") == testing::slurp(dir / "b/messages.jsonl"));
    CHECK(testing::slurp(dir / "a/labels.jsonl") == testing::slurp(dir / "b/labels.jsonl"));
    spec.seed = 2;
    write_synthetic(generate_synthetic(spec), dir / "c");
    CHECK(testing::slurp(dir / "a/messages.jsonl") != testing::slurp(dir / "c/messages.jsonl"));
}

TEST_CASE("written corpus ingests cleanly") {
    testing::TempDir dir("synth-ingest");
    SyntheticSpec spec;
    spec.stories = 100;
    const auto c = generate_synthetic(spec);
    write_synthetic(c, dir / "syn");
    CorpusStore store(dir / "c");
    const auto s = store.ingest_file(dir / "syn/messages.jsonl");
    CHECK(s.accepted == c.messages.size());
    CHECK(s.rejected.empty());
    CHECK(store.attach_labels_file(dir / "syn/labels.jsonl").matched == c.labels.size());
}

TEST_CASE("invalid specs") {
    SyntheticSpec spec;
    spec.fake_fraction = 0.0;
    CHECK_THROWS_AS(generate_synthetic(spec), Error);
    spec.fake_fraction = 1.0;
    CHECK_THROWS_AS(generate_synthetic(spec), Error);
    spec.fake_fraction = 0.1;
    spec.stories = 0;
    CHECK_THROWS_AS(generate_synthetic(spec), Error);
    CHECK_THROWS_AS(SignalStrength::preset("extreme"), Error);
}

TEST_CASE("planted signals point the right way") {
    SyntheticSpec spec;
    spec.stories = 3000;
    const auto m = testing::synthetic_matrix(spec);
    auto mean_of_slot = [&](const char* name, int label) {
        const size_t s = m.schema.require(name);
        double sum = 0;
        size_t n = 0;
        for (const auto& r : m.rows)
            if (r.label == label) {
                sum += r.number(s);
                ++n;
            }
        return sum / n;
    };
    CHECK(mean_of_slot("count_web_dissemination_urls", 1) > mean_of_slot("count_web_dissemination_urls", 0));
    CHECK(mean_of_slot("rate_3600", 1) > mean_of_slot("rate_3600", 0));
    CHECK(mean_of_slot("political_bias_right", 1) > mean_of_slot("political_bias_right", 0));
}

TEST_CASE("no planted signal keeps label-independent distributions") {
    SyntheticSpec spec;
    spec.stories = 3000;
    spec.fake_fraction = 0.2;
    spec.strength = SignalStrength::preset("none");
    const auto m = testing::synthetic_matrix(spec);
    const size_t s = m.schema.require("count_web_dissemination_urls");
    double f = 0, u = 0;
    size_t nf = 0, nu = 0;
    for (const auto& r : m.rows) (r.label ? (f += r.number(s), ++nf) : (u += r.number(s), ++nu));
    CHECK(std::abs(f / nf - u / nu) < 0.3);
}

TEST_CASE("low-share fakes") {
    SyntheticSpec spec;
    spec.stories = 2000;
    spec.fake_fraction = 0.05;
    spec.fake_share_scale = 0.2;
    const auto m = testing::synthetic_matrix(spec);
    const size_t s = m.schema.require("count_shares");
    double f = 0, u = 0;
    size_t nf = 0, nu = 0;
    for (const auto& r : m.rows) (r.label ? (f += r.number(s), ++nf) : (u += r.number(s), ++nu));
    CHECK(f / nf < u / nu);
}

}
