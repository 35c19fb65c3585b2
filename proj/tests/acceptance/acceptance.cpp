// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "factrank/analysis.hpp"
#include "factrank/image_io.hpp"
#include "factrank/metrics.hpp"
#include "factrank/phash.hpp"
#include "factrank/protocol.hpp"
#include "factrank/ranking.hpp"
#include "factrank/util.hpp"
#include "support.hpp"

using namespace factrank;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    if (!ok) ++failures;
}

template <class F>
void criterion(const std::string& name, F&& body) {
    try {
        std::string detail;
        const bool ok = body(detail);
        report(name, ok, detail);
    } catch (const std::exception& e) {
        report(name, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

// Brute-force evaluator: counts over the prefix, ideal DCG from a sorted copy.
struct Brute {
    static double precision(const std::vector<int>& r, size_t k) {
        double hits = 0;
        for (size_t i = 0; i < r.size() && i < k; ++i) hits += r[i];
        return hits / k;
    }
    static double recall(const std::vector<int>& r, size_t k) {
        double hits = 0, all = 0;
        for (size_t i = 0; i < r.size(); ++i) {
            all += r[i];
            if (i < k) hits += r[i];
        }
        return hits / all;
    }
    static double dcg(const std::vector<int>& r, size_t k) {
        double s = 0;
        for (size_t pos = 1; pos <= r.size() && pos <= k; ++pos)
            s += (std::pow(2.0, r[pos - 1]) - 1.0) / (std::log(pos + 1.0) / std::log(2.0));
        return s;
    }
    static double ndcg(const std::vector<int>& r, size_t k) {
        auto ideal = r;
        std::sort(ideal.begin(), ideal.end(), std::greater<>());
        const double best = dcg(ideal, k);
        return best == 0 ? 0.0 : dcg(r, k) / best;
    }
};

bool metric_oracle(std::string& detail) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    size_t cases = 0;
    auto compare = [&](const std::vector<int>& r, size_t k) {
        worst = std::max(worst, std::abs(precision_at_k(r, k) - Brute::precision(r, k)));
        worst = std::max(worst, std::abs(recall_at_k(r, k) - Brute::recall(r, k)));
        worst = std::max(worst, std::abs(ndcg_at_k(r, k) - Brute::ndcg(r, k)));
        ++cases;
    };
    for (size_t n = 1; n <= 8; ++n)
        for (uint32_t mask = 1; mask < (1u << n); ++mask) {
            std::vector<int> r(n);
            for (size_t i = 0; i < n; ++i) r[i] = (mask >> i) & 1u;
            for (size_t k = 1; k <= n + 1; ++k) compare(r, k);
        }
    Rng rng(20181001);
    for (int t = 0; t < 10000; ++t) {
        std::vector<int> r(200);
        const double p = 0.01 + 0.3 * rng.uniform();
        for (auto& x : r) x = rng.uniform() < p;
        if (std::count(r.begin(), r.end(), 1) == 0) r[rng.below(200)] = 1;
        for (size_t k : {1, 5, 10, 50, 100, 200, 250}) compare(r, k);
    }
    const double secs = seconds_since(t0);
    detail = std::to_string(cases) + " comparisons, max abs error " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s";
    return worst <= 1e-12 && secs < 60.0;
}

bool ndcg_hand(std::string& detail) {
    const std::vector<int> r = {1, 0, 1};
    const double v = ndcg_at_k(r, 3);
    detail = "NDCG@3 for fakes at 1,3 = " + fmt(v, 6);
    return std::abs(v - 0.9198) <= 1e-4;
}

bool census(std::string& detail) {
    const auto& schema = FeatureSchema::standard();
    const std::array<size_t, kFeatureSetCount> expected = {9, 31, 49, 38, 8, 4, 5, 3, 3, 5, 26};
    const auto counts = schema.set_counts();
    ImageStory story;
    story.share_events = {testing::event(100, "u", "g")};
    const std::vector<MessageRecord> recs = {{"m", 100, "g", "u", "", "", "", std::nullopt, 0}};
    const auto v = extract_features(story, CorpusStats::from_records(recs), testing::lexicon());
    std::ostringstream s;
    for (size_t c : counts) s << c << ' ';
    detail = "slots " + std::to_string(v.values.size()) + ", per set " + s.str();
    return schema.size() == 181 && v.values.size() == 181 && counts == expected;
}

bool temporal(std::string& detail) {
    const auto& schema = FeatureSchema::standard();
    std::vector<size_t> acc, rate;
    for (int64_t w : kTemporalWindows) {
        acc.push_back(schema.require("acc_" + std::to_string(w)));
        rate.push_back(schema.require("rate_" + std::to_string(w)));
    }
    Rng rng(7);
    size_t checked = 0, monotone_bad = 0, product_bad = 0, quotient_bad = 0;
    std::string example;
    for (int t = 0; t < 2000; ++t) {
        ImageStory story;
        int64_t ts = 1535760000;
        const size_t n = 1 + rng.below(t % 4 == 0 ? 400 : 40);
        const double gap = std::pow(10.0, 1.0 + 3.0 * rng.uniform());
        for (size_t i = 0; i < n; ++i) {
            story.share_events.push_back(testing::event(ts, "u" + std::to_string(rng.below(30)), "g" + std::to_string(rng.below(10)),
                                                        "m" + std::to_string(i)));
            ts += static_cast<int64_t>(rng.below(static_cast<uint64_t>(gap) + 1));
        }
        const auto v = extract_environment(story);
        const size_t offset = kContentSlots + kSourceSlots;
        for (size_t i = 0; i < kTemporalWindows.size(); ++i) {
            const double count = std::get<double>(v[acc[i] - offset]);
            const double r = std::get<double>(v[rate[i] - offset]);
            const double w = static_cast<double>(kTemporalWindows[i]);
            if (i > 0 && count < std::get<double>(v[acc[i - 1] - offset])) ++monotone_bad;
            if (r != count / w) ++quotient_bad;
            if (r * w != count) {
                ++product_bad;
                if (example.empty()) example = "count " + fmt(count, 17) + ", w " + fmt(w, 17) + ": rate*w = " + fmt(r * w, 17);
            }
            ++checked;
        }
    }
    detail = std::to_string(checked) + " windows; monotonicity violations " + std::to_string(monotone_bad) +
             "; rate != count/w " + std::to_string(quotient_bad) + "; rate*w != count in binary64 " +
             std::to_string(product_bad) + (example.empty() ? "" : " (first: " + example + ")");
    return monotone_bad == 0 && quotient_bad == 0 && product_bad == 0;
}

bool infogain(std::string& detail) {
    const std::vector<double> x = {0, 0, 0, 0, 1, 1, 1, 1};
    const std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
    const double perfect = information_gain(x, y);
    const std::vector<std::string> cx = {"a", "a", "a", "a", "b", "b", "b", "b"};
    const std::vector<int> cy = {0, 0, 0, 1, 0, 1, 1, 1};
    const double hand = information_gain(cx, cy);
    const auto& schema = FeatureSchema::standard();
    int hits = 0;
    for (uint64_t seed = 1; seed <= 100; ++seed) {
        SyntheticSpec spec;
        spec.stories = 2000;
        spec.seed = seed;
        const auto rep = rank_features(testing::synthetic_matrix(spec));
        bool ok = true;
        for (int i = 0; i < 3; ++i) ok = ok && schema[schema.require(rep[i].name)].family == FeatureFamily::environment;
        hits += ok;
    }
    detail = "perfect " + fmt(perfect, 12) + ", hand " + fmt(hand, 6) + ", environment top-3 in " + std::to_string(hits) +
             "/100 seeds";
    return std::abs(perfect - 1.0) <= 1e-9 && std::abs(hand - 0.1887) <= 1e-4 && hits >= 95;
}

struct Toy {
    DenseMatrix X;
    std::vector<int> y;
};

Toy xor_toy() {
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

double accuracy(const Booster& b, const Toy& t) {
    size_t ok = 0;
    for (size_t i = 0; i < t.X.rows; ++i) ok += (logistic(b.margin(t.X.row(i))) >= 0.5) == (t.y[i] == 1);
    return static_cast<double>(ok) / t.X.rows;
}

bool non_increasing(const TrainTrace& trace) {
    for (size_t i = 1; i < trace.train_loss.size(); ++i)
        if (trace.train_loss[i] > trace.train_loss[i - 1]) return false;
    return true;
}

bool gbdt(std::string& detail) {
    size_t fixtures = 0, monotone = 0;
    const auto x = xor_toy();
    double acc[3] = {};
    for (int depth : {1, 2}) {
        TrainConfig c;
        c.max_depth = depth;
        c.num_rounds = 100;
        TrainTrace trace;
        acc[depth] = accuracy(fit_booster(x.X, PresortedMatrix::build(x.X), x.y, c, nullptr, {}, &trace), x);
        ++fixtures;
        monotone += non_increasing(trace);
    }
    SyntheticSpec spec;
    spec.stories = 400;
    spec.fake_fraction = 0.05;
    const auto m = testing::synthetic_matrix(spec);
    for (double rate : {0.001, 0.01, 0.1, 1.0})
        for (int depth : {1, 3, 6, 15}) {
            TrainConfig c;
            c.max_depth = depth;
            c.learning_rate = rate;
            c.num_rounds = 40;
            TrainTrace trace;
            train_model(m, c, nullptr, &trace);
            ++fixtures;
            monotone += non_increasing(trace);
        }
    TrainConfig c;
    c.seed = 42;
    c.num_rounds = 60;
    const bool same = serialize_model(train_model(m, c)) == serialize_model(train_model(m, c));
    detail = "loss non-increasing on " + std::to_string(monotone) + "/" + std::to_string(fixtures) +
             " fixtures; xor accuracy depth1 " + fmt(acc[1]) + ", depth2 " + fmt(acc[2]) + "; identical bytes " +
             (same ? "yes" : "no");
    return monotone == fixtures && acc[1] <= 0.75 && acc[2] == 1.0 && same;
}

bool protocol(std::string& detail) {
    SyntheticSpec spec;
    spec.stories = 1000;
    spec.seed = 3;
    const auto m = testing::synthetic_matrix(spec);
    const auto labels = m.labels();
    const double global = static_cast<double>(std::count(labels.begin(), labels.end(), 1)) / labels.size();
    const FoldPlan plan = stratified_folds(labels, 5, 9);
    bool folds_ok = plan.size() == 5;
    bool samples_ok = true;
    for (const auto& portion : plan.portions) {
        size_t fakes = 0;
        for (size_t i : portion) fakes += labels[i];
        folds_ok = folds_ok && std::abs(static_cast<double>(fakes) - global * portion.size()) <= 1.0;
        const auto expected = static_cast<size_t>(std::llround(200.0 * fakes / portion.size()));
        for (const auto& sample : bootstrap_samples(portion, labels, 50, 200, 5)) {
            size_t f = 0;
            for (size_t i : sample) f += labels[i];
            samples_ok = samples_ok && sample.size() == 200 && f == expected;
        }
    }
    ExperimentOptions o;
    o.grid = {TrainConfig{}};
    o.grid[0].num_rounds = 30;
    const auto r = run_experiment(m, o);
    detail = std::string("folds within 1 fake: ") + (folds_ok ? "yes" : "no") + "; bootstrap fake counts exact: " +
             (samples_ok ? "yes" : "no") + "; executions " + std::to_string(r.executions);
    return folds_ok && samples_ok && r.executions == 250;
}

bool headline(std::string& detail) {
    const auto t0 = Clock::now();
    int wins = 0;
    double effort_ratio_sum = 0;
    std::ostringstream misses;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        SyntheticSpec spec;
        spec.stories = 4000;
        spec.fake_fraction = 0.03;
        spec.seed = seed;
        const auto m = testing::synthetic_matrix(spec);
        ExperimentOptions o;
        o.seed = seed;
        const auto r = run_experiment(m, o);
        const double ef = r.effort_of(Strategy::fakeness), es = r.effort_of(Strategy::shares);
        bool ok = ef <= 0.6 * es;
        for (const char* metric : {"precision", "recall", "ndcg"}) {
            const double f = r.get(Strategy::fakeness, metric, 10).mean;
            const double s = r.get(Strategy::shares, metric, 10).mean;
            ok = ok && f > s && f >= 1.3 * s;
        }
        effort_ratio_sum += ef / es;
        wins += ok;
        if (!ok) misses << ' ' << seed;
    }
    const double secs = seconds_since(t0);
    detail = std::to_string(wins) + "/20 seeds meet effort and top-10 gains; mean effort ratio " +
             fmt(effort_ratio_sum / 20) + "; " + fmt(secs, 4) + " s" +
             (misses.str().empty() ? "" : "; missed seeds" + misses.str());
    return wins >= 18 && secs < 600;
}

bool phash_check(std::string& detail) {
    const auto bytes = testing::slurp(testing::fixture("images/img_checker8.png"));
    const std::span<const uint8_t> span(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size());
    const auto a = phash(decode_image(span));
    const auto b = phash(decode_image(span));
    const auto black = phash(load_image(testing::fixture("images/black.png")));
    const auto scene = phash(load_image(testing::fixture("images/scene.png")));
    detail = "checker " + a.hex() + ", scene " + scene.hex() + ", black " + black.hex();
    return a == b && black.bits == 0 && a.hex() == "0d055f4f0d0d4f4e" && scene.hex() == "1a2d1eec9cbce052";
}

bool has(const json& j, const char* key, json::value_t type) {
    if (!j.contains(key)) return false;
    const auto t = j[key].type();
    if (type == json::value_t::number_float) return j[key].is_number();
    if (type == json::value_t::number_unsigned) return j[key].is_number_integer();
    return t == type;
}

bool detail_schema(const json& d) {
    using T = json::value_t;
    return has(d, "story_id", T::string) && has(d, "shares", T::number_unsigned) && has(d, "users", T::number_unsigned) &&
           has(d, "groups", T::number_unsigned) && has(d, "score", T::number_float) &&
           has(d, "thermometer", T::string) && has(d, "first_seen", T::string) && has(d, "verdict", T::string) &&
           d.contains("image");
}

bool service_contract(std::string& detail) {
    testing::TempDir dir("acceptance-service");
    const auto demo = testing::build_demo(dir.path());
    MonitorService svc(demo.config);
    const auto snap = svc.snapshot();
    size_t responses = 0, pii = 0, schema_bad = 0, order_bad = 0;
    std::vector<std::string> problems;

    auto scan = [&](const HttpResponse& res) {
        ++responses;
        if (res.content_type != "application/json") return json();
        const json body = json::parse(res.body);
        if (!pii_violations(body, snap->raw_ids).empty()) ++pii;
        if (res.body.find("\"user_id\"") != std::string::npos || res.body.find("\"group_id\"") != std::string::npos)
            ++pii;
        return body;
    };
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) {
            ++schema_bad;
            problems.push_back(what);
        }
    };

    auto res = svc.handle(testing::get("/api/dates"));
    json body = scan(res);
    expect(res.status == 200 && body["dates"].is_array() && body["dates"].size() == snap->dates.size(), "dates");

    for (const auto& [date, idx] : snap->by_first_date)
        for (Strategy s : kStrategies) {
            res = svc.handle(testing::get("/api/rank", {{"date", date}, {"strategy", to_string(s)}, {"k", "500"}}));
            body = scan(res);
            expect(res.status == 200 && body["items"].is_array() && body["total"] == idx.size() && body["date"] == date,
                   "rank " + date);
            FeatureMatrix sub{snap->matrix.schema, {}};
            for (size_t i : idx) sub.rows.push_back(snap->matrix.rows[i]);
            const auto expected = rank_stories(sub, s, &snap->model);
            if (body["items"].size() != expected.entries.size()) ++order_bad;
            else
                for (size_t i = 0; i < expected.entries.size(); ++i) {
                    const auto& item = body["items"][i];
                    if (item["story_id"] != expected.entries[i].story_id || item["rank"] != i + 1 ||
                        item["rank_score"].get<double>() != expected.entries[i].score)
                        ++order_bad;
                    if (!detail_schema(item)) ++schema_bad;
                }
        }

    for (size_t i = 0; i < snap->stories.size(); i += 37) {
        res = svc.handle(testing::get("/api/stories/" + snap->stories[i].id_hex()));
        body = scan(res);
        expect(res.status == 200 && detail_schema(body) && body["thermometer"] == thermometer(body["score"]), "story");
    }

    res = svc.handle(testing::get("/api/model"));
    body = scan(res);
    expect(res.status == 200 && body["features"] == 181 && body["strategies"].size() == 4 && body.contains("config"),
           "model");

    res = svc.handle(testing::get("/api/images/" + to_hex64(demo.story_with_image)));
    scan(res);
    expect(res.status == 200 && res.content_type == "image/jpeg" && !res.body.empty(), "image");

    const ImageStory* target = nullptr;
    for (const auto& s : snap->stories)
        if (s.verdict == Verdict::unchecked) target = &s;
    res = svc.handle(testing::post("/api/labels", json{{"story_id", target->id_hex()}, {"verdict", "fake"}}.dump()));
    body = scan(res);
    expect(res.status == 200 && body["persisted"] == true, "labels");
    body = scan(svc.handle(testing::get("/api/stories/" + target->id_hex())));
    expect(body["verdict"] == "fake", "label visible");

    for (const auto& [path, status] : std::vector<std::pair<std::string, int>>{
             {"/api/rank?k=0", 400}, {"/api/stories/zz", 400}, {"/api/stories/ffffffffffffffff", 404}, {"/nope", 404}}) {
        auto req = testing::get(path.substr(0, path.find('?')));
        if (path.find('?') != std::string::npos) req.query["k"] = "0";
        res = svc.handle(req);
        body = scan(res);
        expect(res.status == status && body.contains("code") && body.contains("message"), "error " + path);
    }
    res = svc.handle(testing::get("/api/dates", {}, "bad"));
    scan(res);
    expect(res.status == 401, "unauthorized");

    // Over real HTTP.
    MonitorService live(demo.config);
    const int port = live.bind();
    std::thread server([&] { live.listen_after_bind(); });
    httplib::Client client("127.0.0.1", port);
    auto http = client.Get("/api/rank?strategy=shares&k=5", {{"Authorization", "Bearer secret-token"}});
    const bool http_ok = http && http->status == 200 && json::parse(http->body)["items"].size() <= 5;
    live.stop();
    server.join();
    expect(http_ok, "http");

    std::string p;
    for (const auto& s : problems) p += " " + s;
    detail = std::to_string(responses) + " responses; schema problems " + std::to_string(schema_bad) + p +
             "; PII hits " + std::to_string(pii) + "; rank order mismatches " + std::to_string(order_bad);
    return schema_bad == 0 && pii == 0 && order_bad == 0;
}

}  // namespace

int main() {
    criterion("metric oracle equivalence", metric_oracle);
    criterion("ndcg hand case", ndcg_hand);
    criterion("feature census", census);
    criterion("temporal correctness", temporal);
    criterion("information gain", infogain);
    criterion("gbdt", gbdt);
    criterion("protocol", protocol);
    criterion("headline reproduction", headline);
    criterion("phash", phash_check);
    criterion("service contract", service_contract);
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
