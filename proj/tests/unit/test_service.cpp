#include <doctest.h>

#include <thread>

#include <httplib.h>

#include "factrank/ranking.hpp"
#include "factrank/service.hpp"
#include "factrank/util.hpp"
#include "support.hpp"

using namespace factrank;
using nlohmann::json;

namespace {

struct Fixture {
    testing::TempDir dir{"service"};
    testing::Demo demo = testing::build_demo(dir.path());
    MonitorService service{demo.config};

    json ok(const HttpRequest& r) {
        const auto res = service.handle(r);
        INFO(r.path << " -> " << res.body);
        REQUIRE(res.status == 200);
        return json::parse(res.body);
    }
    std::pair<int, json> call(const HttpRequest& r) {
        const auto res = service.handle(r);
        return {res.status, res.content_type == "application/json" ? json::parse(res.body) : json()};
    }
};

Fixture& shared() {
    static Fixture f;
    return f;
}

// Independent check: no object key looks like PII and no string is a raw id.
void expect_clean(const json& body, const ServiceSnapshot& snap) {
    std::vector<const json*> stack = {&body};
    while (!stack.empty()) {
        const json* j = stack.back();
        stack.pop_back();
        if (j->is_object()) {
            for (const auto& [k, v] : j->items()) {
                CHECK_FALSE(k.find("user_id") != std::string::npos);
                CHECK_FALSE(k.find("group_id") != std::string::npos);
                CHECK_FALSE(k.find("phone") != std::string::npos);
                stack.push_back(&v);
            }
        } else if (j->is_array()) {
            for (const auto& v : *j) stack.push_back(&v);
        } else if (j->is_string()) {
            CHECK(snap.raw_ids.count(j->get<std::string>()) == 0);
        }
    }
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("thermometer bands") {
    CHECK(thermometer(0.9) == "high");
    CHECK(thermometer(0.66) == "high");
    CHECK(thermometer(0.6599) == "medium");
    CHECK(thermometer(0.33) == "medium");
    CHECK(thermometer(0.3299) == "low");
    CHECK(thermometer(0.0) == "low");
}

TEST_CASE("config validation") {
    ServiceConfig c;
    CHECK_THROWS_AS(c.validate(), Error);
    c.tokens = {"t"};
    CHECK_NOTHROW(c.validate());
    c.page_limit = 501;
    CHECK_THROWS_AS(c.validate(), Error);
    c.page_limit = 0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("pii scan") {
    CHECK(is_pii_field("user_id"));
    CHECK(is_pii_field("Group_ID"));
    CHECK(is_pii_field("phone_number"));
    CHECK_FALSE(is_pii_field("users"));
    CHECK_FALSE(is_pii_field("story_id"));
    const std::unordered_set<std::string> raw = {"u000001"};
    CHECK(pii_violations(json{{"items", {{{"users", 3}}}}}, raw).empty());
    CHECK(pii_violations(json{{"items", {{{"user_id", "x"}}}}}, raw) == std::vector<std::string>{"/items/0/user_id"});
    CHECK(pii_violations(json{{"who", "u000001"}}, raw) == std::vector<std::string>{"/who"});
}

TEST_CASE("every endpoint requires a valid bearer token") {
    auto& f = shared();
    const std::string id = to_hex64(f.demo.story_with_image);
    for (const std::string& path : {std::string("/api/dates"), std::string("/api/rank"), std::string("/api/model"),
                                    "/api/stories/" + id, "/api/images/" + id}) {
        for (const std::string& token : {std::string(""), std::string("wrong")}) {
            const auto [status, body] = f.call(testing::get(path, {}, token));
            CHECK(status == 401);
            CHECK(body["code"] == "unauthorized");
        }
        CHECK(f.service.handle(testing::get(path, {}, "second-token")).status == 200);
    }
    auto basic = testing::get("/api/dates");
    basic.headers["authorization"] = "Basic secret-token";
    CHECK(f.call(basic).first == 401);
}

TEST_CASE("unknown routes and methods") {
    auto& f = shared();
    CHECK(f.call(testing::get("/")).first == 404);
    CHECK(f.call(testing::get("/api/nothing")).first == 404);
    auto del = testing::get("/api/dates");
    del.method = "DELETE";
    CHECK(f.call(del).first == 405);
    CHECK(f.call(testing::get("/api/labels")).first == 405);
}

TEST_CASE("dates are the sorted share dates") {
    auto& f = shared();
    const auto body = f.ok(testing::get("/api/dates"));
    const auto dates = body["dates"].get<std::vector<std::string>>();
    std::set<std::string> expected;
    for (const auto& s : f.service.snapshot()->stories)
        for (const auto& e : s.share_events) expected.insert(utc_date(e.timestamp));
    CHECK(dates == std::vector<std::string>(expected.begin(), expected.end()));
    CHECK(dates.size() >= 4);
}

TEST_CASE("rank ordering equals the scoring module") {
    auto& f = shared();
    const auto snap = f.service.snapshot();
    const std::string date = snap->dates.front();
    for (Strategy s : kStrategies) {
        FeatureMatrix sub{snap->matrix.schema, {}};
        for (size_t i = 0; i < snap->stories.size(); ++i)
            if (utc_date(snap->stories[i].first_share().timestamp) == date) sub.rows.push_back(snap->matrix.rows[i]);
        const auto expected = rank_stories(sub, s, &snap->model);

        const auto body = f.ok(testing::get("/api/rank", {{"date", date}, {"strategy", to_string(s)}, {"k", "20"}}));
        CHECK(body["total"] == sub.rows.size());
        CHECK(body["strategy"] == to_string(s));
        REQUIRE(body["items"].size() == std::min<size_t>(20, sub.rows.size()));
        for (size_t i = 0; i < body["items"].size(); ++i) {
            CHECK(body["items"][i]["story_id"] == expected.entries[i].story_id);
            CHECK(body["items"][i]["rank"] == i + 1);
            CHECK(body["items"][i]["rank_score"] == expected.entries[i].score);
        }
        expect_clean(body, *snap);
    }
}

TEST_CASE("strategies give different top lists on the demo corpus") {
    auto& f = shared();
    const auto snap = f.service.snapshot();
    const std::string date = snap->dates.front();
    auto top = [&](const char* strategy) {
        std::vector<std::string> ids;
        const auto body = f.ok(testing::get("/api/rank", {{"date", date}, {"strategy", strategy}, {"k", "10"}}));
        for (const auto& item : body["items"]) ids.push_back(item["story_id"]);
        return ids;
    };
    CHECK(top("shares") != top("fakeness"));
}

TEST_CASE("rank paging, defaults and bad parameters") {
    auto& f = shared();
    const std::string date = f.service.snapshot()->dates.front();
    const auto all = f.ok(testing::get("/api/rank", {{"date", date}, {"k", "500"}}));
    const auto p2 = f.ok(testing::get("/api/rank", {{"date", date}, {"k", "5"}, {"page", "2"}}));
    REQUIRE(all["items"].size() >= 10);
    for (size_t i = 0; i < 5; ++i) CHECK(p2["items"][i]["story_id"] == all["items"][5 + i]["story_id"]);
    CHECK(f.ok(testing::get("/api/rank", {{"date", date}}))["strategy"] == "fakeness");
    CHECK(f.ok(testing::get("/api/rank", {{"date", "1999-01-01"}}))["total"] == 0);
    CHECK(f.ok(testing::get("/api/rank"))["date"] == f.service.snapshot()->by_first_date.rbegin()->first);

    for (const auto& [key, value, code] : std::vector<std::tuple<std::string, std::string, std::string>>{
             {"k", "0", "bad_k"},          {"k", "501", "bad_k"},       {"k", "ten", "bad_k"},
             {"page", "0", "bad_page"},    {"strategy", "x", "bad_strategy"}, {"date", "2018-9-1", "bad_date"}}) {
        std::map<std::string, std::string> q = {{"date", date}};
        q[key] = value;
        const auto [status, body] = f.call(testing::get("/api/rank", q));
        CHECK(status == 400);
        CHECK(body["code"] == code);
    }
}

TEST_CASE("story detail fields") {
    auto& f = shared();
    const auto snap = f.service.snapshot();
    const auto& story = snap->stories[3];
    const auto body = f.ok(testing::get("/api/stories/" + story.id_hex()));
    std::set<std::string> users, groups;
    for (const auto& e : story.share_events) {
        users.insert(e.user_id);
        groups.insert(e.group_id);
    }
    CHECK(body["story_id"] == story.id_hex());
    CHECK(body["shares"] == story.share_events.size());
    CHECK(body["users"] == users.size());
    CHECK(body["groups"] == groups.size());
    const double score = body["score"];
    CHECK(score > 0.0);
    CHECK(score < 1.0);
    CHECK(body["thermometer"] == thermometer(score));
    CHECK(body["first_seen"] == utc_date(story.first_share().timestamp));
    CHECK(body["verdict"] == to_string(story.verdict));
    expect_clean(body, *snap);

    CHECK(f.call(testing::get("/api/stories/xyz")).first == 400);
    CHECK(f.call(testing::get("/api/stories/ffffffffffffffff")).first == 404);
}

TEST_CASE("model endpoint") {
    auto& f = shared();
    const auto body = f.ok(testing::get("/api/model"));
    CHECK(body["manifest_checksum"] == to_hex64(FeatureSchema::standard().checksum()));
    CHECK(body["trained_at"] == 1538352000);
    CHECK(body["strategies"] == json{"fakeness", "shares", "distinct_groups", "distinct_users"});
    CHECK(body["features"] == 181);
}

TEST_CASE("images are served from the image directory only") {
    auto& f = shared();
    const auto res = f.service.handle(testing::get("/api/images/" + to_hex64(f.demo.story_with_image)));
    CHECK(res.status == 200);
    CHECK(res.content_type == "image/jpeg");
    CHECK(res.body == testing::slurp(testing::fixture("images/scene.jpg")));
    const auto other = f.service.snapshot()->stories[1].id_hex();
    CHECK(f.call(testing::get("/api/images/" + other)).first == 404);
    CHECK(f.call(testing::get("/api/images/..%2F..%2Fetc%2Fpasswd")).first == 400);
}

TEST_CASE("image refs escaping the directory are refused") {
    testing::TempDir dir("escape");
    std::filesystem::create_directories(dir / "images");
    std::filesystem::copy_file(testing::fixture("images/scene.png"), dir / "secret.png");
    {
        CorpusStore store(dir / "corpus");
        std::istringstream in(json{{"message_id", "m1"}, {"timestamp", 1535760000}, {"user_id", "u"}, {"group_id", "g"},
                                   {"image_ref", "../secret.png"}, {"phash", "00000000000000aa"}}
                                  .dump() +
                              "\n" +
                              json{{"message_id", "m2"}, {"timestamp", 1535760100}, {"user_id", "u"}, {"group_id", "g"},
                                   {"phash", "00000000000000bb"}}
                                  .dump() +
                              "\n");
        store.ingest(in);
        store.attach_labels({{0xaa, "", Verdict::fake, "", std::nullopt}});
        const auto a = store.assemble_stories();
        const auto m = build_matrix(a.stories, CorpusStats::from_records(store.records()), testing::lexicon());
        TrainConfig c;
        c.num_rounds = 2;
        c.min_leaf = 1;
        save_model(train_model(m, c), dir / "model.bin");
    }
    ServiceConfig c;
    c.corpus = dir / "corpus";
    c.model = dir / "model.bin";
    c.lexicon = testing::fixture("../../data/lexicon.conf");
    c.image_dir = dir / "images";
    c.tokens = {"t"};
    MonitorService s(c);
    const auto res = s.handle(testing::get("/api/images/00000000000000aa", {}, "t"));
    CHECK(res.status == 404);
}

TEST_CASE("label submission round trip") {
    testing::TempDir dir("labels");
    auto demo = testing::build_demo(dir.path(), 300);
    MonitorService service(demo.config);
    const auto snap = service.snapshot();
    const ImageStory* target = nullptr;
    for (const auto& s : snap->stories)
        if (s.verdict == Verdict::unchecked) {
            target = &s;
            break;
        }
    REQUIRE(target);
    const std::string id = target->id_hex();
    const auto labels_before = testing::slurp(demo.config.corpus / "labels.jsonl");

    auto res = service.handle(testing::post("/api/labels", json{{"story_id", id}, {"verdict", "fake"}}.dump(), "nope"));
    CHECK(res.status == 401);
    CHECK(testing::slurp(demo.config.corpus / "labels.jsonl") == labels_before);

    res = service.handle(testing::post("/api/labels", json{{"story_id", id}, {"verdict", "fake"}}.dump()));
    REQUIRE(res.status == 200);
    CHECK(json::parse(res.body)["persisted"] == true);
    CHECK(json::parse(service.handle(testing::get("/api/stories/" + id)).body)["verdict"] == "fake");

    res = service.handle(testing::post("/api/labels", json{{"story_id", id}, {"verdict", "fake"}}.dump()));
    CHECK(json::parse(res.body)["persisted"] == false);

    CHECK(service.handle(testing::post("/api/labels", json{{"story_id", "ffffffffffffffff"}}.dump())).status == 404);
    CHECK(service.handle(testing::post("/api/labels", "{not json")).status == 400);
    CHECK(service.handle(testing::post("/api/labels", json{{"story_id", id}, {"verdict", "maybe"}}.dump())).status == 400);
    CHECK(service.handle(testing::post("/api/labels", json{{"verdict", "fake"}}.dump())).status == 400);

    // The verdict survives a reload from disk.
    service.reload();
    CHECK(json::parse(service.handle(testing::get("/api/stories/" + id)).body)["verdict"] == "fake");
    CorpusStore store(demo.config.corpus);
    CHECK(store.labels().size() == snap->stories.size() * 0 + store.labels().size());
    CHECK(store.labels().back().phash == target->story_id);
}

TEST_CASE("real http round trip") {
    auto& f = shared();
    testing::TempDir dir("http");
    auto config = f.demo.config;
    MonitorService service(config);
    const int port = service.bind();
    std::thread server([&] { service.listen_after_bind(); });
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    auto res = client.Get("/api/dates", {{"Authorization", "Bearer secret-token"}});
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["dates"].size() >= 4);
    res = client.Get("/api/dates");
    REQUIRE(res);
    CHECK(res->status == 401);
    const std::string date = service.snapshot()->dates.front();
    res = client.Get("/api/rank?date=" + date + "&strategy=shares&k=3", {{"Authorization", "Bearer secret-token"}});
    REQUIRE(res);
    CHECK(json::parse(res->body)["items"].size() == 3);
    service.stop();
    server.join();
}

}
