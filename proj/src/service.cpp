#include "factrank/service.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <httplib.h>

#include "factrank/model_io.hpp"
#include "factrank/util.hpp"

namespace factrank {

using nlohmann::json;

namespace {

HttpResponse json_response(int status, const json& body) {
    HttpResponse r;
    r.status = status;
    r.body = body.dump();
    return r;
}

HttpResponse error_response(int status, const std::string& code, const std::string& message) {
    return json_response(status, json{{"code", code}, {"message", message}});
}

int status_of(const std::string& code) {
    static const std::unordered_map<std::string, int> table = {
        {"unauthorized", 401},  {"not_found", 404},     {"unknown_story", 404}, {"no_image", 404},
        {"method_not_allowed", 405}, {"bad_date", 400}, {"bad_k", 400},         {"bad_page", 400},
        {"bad_strategy", 400},  {"bad_id", 400},        {"bad_hash", 400},      {"bad_json", 400},
        {"bad_verdict", 400},   {"bad_request", 400},
    };
    auto it = table.find(code);
    return it == table.end() ? 500 : it->second;
}

bool constant_time_equal(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    unsigned char diff = 0;
    for (size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
    return diff == 0;
}

size_t parse_count(const std::map<std::string, std::string>& query, const std::string& name, size_t fallback,
                   size_t lo, size_t hi, const std::string& code) {
    auto it = query.find(name);
    if (it == query.end()) return fallback;
    const std::string& s = it->second;
    size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v < lo || v > hi)
        throw Error(code, name + " must be an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
}

uint64_t parse_story_id(const std::string& id) {
    try {
        return parse_hex64(id);
    } catch (const Error&) {
        throw Error("bad_id", "story id must be 16 hex digits");
    }
}

std::string image_type(const std::filesystem::path& p) {
    std::string ext = utf8::lower(p.extension().string());
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".gif") return "image/gif";
    if (ext == ".webp") return "image/webp";
    return "application/octet-stream";
}

// Resolves `ref` inside `root`, or nothing when it would escape it.
std::optional<std::filesystem::path> contained(const std::filesystem::path& root, const std::filesystem::path& ref) {
    namespace fs = std::filesystem;
    std::error_code ec;
    const fs::path base = fs::weakly_canonical(root, ec);
    if (ec) return std::nullopt;
    const fs::path full = fs::weakly_canonical(ref.is_absolute() ? ref : root / ref, ec);
    if (ec) return std::nullopt;
    const fs::path rel = full.lexically_relative(base);
    if (rel.empty() || *rel.begin() == "..") return std::nullopt;
    if (!fs::is_regular_file(full, ec)) return std::nullopt;
    return full;
}

void scan(const json& j, const std::string& path, const std::unordered_set<std::string>& raw_ids,
          std::vector<std::string>& out) {
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            const std::string child = path + "/" + key;
            if (is_pii_field(key) || raw_ids.count(key)) out.push_back(child);
            scan(value, child, raw_ids, out);
        }
    } else if (j.is_array()) {
        for (size_t i = 0; i < j.size(); ++i) scan(j[i], path + "/" + std::to_string(i), raw_ids, out);
    } else if (j.is_string()) {
        if (raw_ids.count(j.get_ref<const std::string&>())) out.push_back(path);
    }
}

std::shared_ptr<const ServiceSnapshot> build_snapshot(const CorpusStore& store, const ServiceConfig& config,
                                                      const LexiconConfig& lexicon) {
    auto snap = std::make_shared<ServiceSnapshot>();
    snap->stories = store.assemble_stories().stories;
    const CorpusStats stats = CorpusStats::from_records(store.records());
    snap->matrix = build_matrix(snap->stories, stats, lexicon);
    snap->model = load_model(config.model, snap->matrix.schema);
    snap->margins = snap->model.margins(snap->matrix);

    std::set<std::string> dates;
    for (size_t i = 0; i < snap->stories.size(); ++i) {
        const ImageStory& s = snap->stories[i];
        snap->by_id.emplace(s.story_id, i);
        snap->by_first_date[utc_date(s.first_share().timestamp)].push_back(i);
        for (const ShareEvent& e : s.share_events) dates.insert(utc_date(e.timestamp));
    }
    snap->dates.assign(dates.begin(), dates.end());
    for (const MessageRecord& r : store.records()) {
        snap->raw_ids.insert(r.user_id);
        snap->raw_ids.insert(r.group_id);
    }
    return snap;
}

}  // namespace

void ServiceConfig::validate() const {
    if (tokens.empty()) throw Error("bad_config", "at least one access token is required");
    for (const auto& t : tokens)
        if (t.empty()) throw Error("bad_config", "access tokens must be non-empty");
    if (page_limit < 1 || page_limit > 500) throw Error("bad_config", "page limit must be in [1, 500]");
}

std::string thermometer(double score) {
    if (score < 0.33) return "low";
    if (score < 0.66) return "medium";
    return "high";
}

bool is_pii_field(std::string_view name) {
    static const std::unordered_set<std::string> names = {
        "user_id",  "userid",   "group_id", "groupid", "user",  "sender", "author", "username",
        "user_name", "group_name", "msisdn", "email",  "ip",    "ip_address", "name", "contact",
    };
    const std::string lower = utf8::lower(name);
    return names.count(lower) || lower.find("phone") != std::string::npos;
}

std::vector<std::string> pii_violations(const json& body, const std::unordered_set<std::string>& raw_ids) {
    std::vector<std::string> out;
    scan(body, "", raw_ids, out);
    return out;
}

MonitorService::MonitorService(ServiceConfig config) : config_(std::move(config)) {
    config_.validate();
    lexicon_ = LexiconConfig::load(config_.lexicon);
    reload();
}

MonitorService::~MonitorService() { stop(); }

void MonitorService::reload() {
    std::lock_guard writer(writer_mutex_);
    auto store = std::make_unique<CorpusStore>(config_.corpus);
    auto snap = build_snapshot(*store, config_, lexicon_);
    {
        std::lock_guard lock(snapshot_mutex_);
        snapshot_ = std::move(snap);
    }
    store_ = std::move(store);
    std::unique_lock verdicts(verdict_mutex_);
    submitted_.clear();
}

std::shared_ptr<const ServiceSnapshot> MonitorService::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

Verdict MonitorService::verdict_of(const ServiceSnapshot& snap, size_t index) const {
    std::shared_lock lock(verdict_mutex_);
    auto it = submitted_.find(snap.stories[index].story_id);
    return it == submitted_.end() ? snap.stories[index].verdict : it->second;
}

json MonitorService::story_detail(const ServiceSnapshot& snap, size_t index) const {
    const ImageStory& s = snap.stories[index];
    std::unordered_set<std::string_view> users, groups;
    for (const ShareEvent& e : s.share_events) {
        users.insert(e.user_id);
        groups.insert(e.group_id);
    }
    const double score = logistic(snap.margins[index]);
    return json{
        {"story_id", s.id_hex()},
        {"shares", s.share_events.size()},
        {"users", users.size()},
        {"groups", groups.size()},
        {"score", score},
        {"thermometer", thermometer(score)},
        {"first_seen", utc_date(s.first_share().timestamp)},
        {"verdict", to_string(verdict_of(snap, index))},
        {"image", "/api/images/" + s.id_hex()},
    };
}

bool MonitorService::authorized(const HttpRequest& request) const {
    auto it = request.headers.find("authorization");
    if (it == request.headers.end()) return false;
    constexpr std::string_view prefix = "Bearer ";
    if (it->second.compare(0, prefix.size(), prefix) != 0) return false;
    const std::string_view token = std::string_view(it->second).substr(prefix.size());
    bool ok = false;
    for (const auto& t : config_.tokens) ok |= constant_time_equal(token, t);
    return ok;
}

HttpResponse MonitorService::handle(const HttpRequest& request) {
    HttpResponse response;
    try {
        response = route(request);
    } catch (const Error& e) {
        response = error_response(status_of(e.code()), e.code(), e.what());
    } catch (const json::exception& e) {
        response = error_response(400, "bad_json", e.what());
    } catch (const std::exception& e) {
        response = error_response(500, "internal", e.what());
    }
    if (response.content_type == "application/json") {
        auto snap = snapshot();
        json body = json::parse(response.body, nullptr, false);
        if (body.is_discarded() || (snap && !pii_violations(body, snap->raw_ids).empty()))
            response = error_response(500, "pii_violation", "response withheld");
    }
    return response;
}

HttpResponse MonitorService::route(const HttpRequest& request) {
    const std::string& path = request.path;
    if (path.rfind("/api/", 0) != 0) throw Error("not_found", "no such resource: " + path);
    if (!authorized(request)) throw Error("unauthorized", "missing or invalid bearer token");

    auto snap = snapshot();
    const bool get = request.method == "GET";
    if (path == "/api/dates") {
        if (!get) throw Error("method_not_allowed", "use GET");
        return get_dates(*snap);
    }
    if (path == "/api/rank") {
        if (!get) throw Error("method_not_allowed", "use GET");
        return get_rank(*snap, request);
    }
    if (path == "/api/model") {
        if (!get) throw Error("method_not_allowed", "use GET");
        return get_model(*snap);
    }
    if (path == "/api/labels") {
        if (request.method != "POST") throw Error("method_not_allowed", "use POST");
        return post_label(*snap, request);
    }
    constexpr std::string_view stories = "/api/stories/", images = "/api/images/";
    if (path.rfind(stories, 0) == 0) {
        if (!get) throw Error("method_not_allowed", "use GET");
        return get_story(*snap, path.substr(stories.size()));
    }
    if (path.rfind(images, 0) == 0) {
        if (!get) throw Error("method_not_allowed", "use GET");
        return get_image(*snap, path.substr(images.size()));
    }
    throw Error("not_found", "no such resource: " + path);
}

HttpResponse MonitorService::get_dates(const ServiceSnapshot& snap) const {
    return json_response(200, json{{"dates", snap.dates}});
}

HttpResponse MonitorService::get_rank(const ServiceSnapshot& snap, const HttpRequest& request) const {
    static const std::regex date_re(R"(\d{4}-\d{2}-\d{2})");
    std::string date;
    if (auto it = request.query.find("date"); it != request.query.end()) {
        date = it->second;
        if (!std::regex_match(date, date_re)) throw Error("bad_date", "date must be YYYY-MM-DD");
    } else if (!snap.by_first_date.empty()) {
        date = snap.by_first_date.rbegin()->first;
    }
    Strategy strategy = Strategy::fakeness;
    if (auto it = request.query.find("strategy"); it != request.query.end()) strategy = parse_strategy(it->second);
    const size_t k = parse_count(request.query, "k", std::min<size_t>(20, config_.page_limit), 1, config_.page_limit, "bad_k");
    const size_t page = parse_count(request.query, "page", 1, 1, SIZE_MAX / config_.page_limit, "bad_page");

    json items = json::array();
    size_t total = 0;
    if (auto it = snap.by_first_date.find(date); it != snap.by_first_date.end()) {
        FeatureMatrix sub{snap.matrix.schema, {}};
        std::unordered_map<std::string, size_t> index_of;
        for (size_t i : it->second) {
            sub.rows.push_back(snap.matrix.rows[i]);
            index_of.emplace(snap.matrix.rows[i].story_id, i);
        }
        const RankedList ranked = rank_stories(sub, strategy, &snap.model);
        total = ranked.entries.size();
        for (size_t r = (page - 1) * k; r < std::min(total, page * k); ++r) {
            const RankedEntry& e = ranked.entries[r];
            json item = story_detail(snap, index_of.at(e.story_id));
            item["rank"] = r + 1;
            item["rank_score"] = e.score;
            items.push_back(std::move(item));
        }
    }
    return json_response(200, json{{"date", date},
                                   {"strategy", to_string(strategy)},
                                   {"k", k},
                                   {"page", page},
                                   {"total", total},
                                   {"items", std::move(items)}});
}

HttpResponse MonitorService::get_story(const ServiceSnapshot& snap, const std::string& id) const {
    auto it = snap.by_id.find(parse_story_id(id));
    if (it == snap.by_id.end()) throw Error("unknown_story", "no story " + id);
    return json_response(200, story_detail(snap, it->second));
}

HttpResponse MonitorService::post_label(const ServiceSnapshot& snap, const HttpRequest& request) {
    const json body = json::parse(request.body);
    if (!body.is_object() || !body.contains("story_id") || !body["story_id"].is_string())
        throw Error("bad_request", "body must be {\"story_id\": \"...\", \"verdict\": \"fake\"}");
    const std::string id = body["story_id"].get<std::string>();
    const uint64_t story_id = parse_story_id(id);
    Verdict verdict = Verdict::fake;
    if (body.contains("verdict")) {
        if (!body["verdict"].is_string()) throw Error("bad_verdict", "verdict must be a string");
        verdict = parse_verdict(body["verdict"].get<std::string>());
    }
    auto it = snap.by_id.find(story_id);
    if (it == snap.by_id.end()) throw Error("unknown_story", "no story " + id);

    bool persisted = false;
    {
        std::lock_guard writer(writer_mutex_);
        if (verdict_of(snap, it->second) != verdict) {
            LabelVerdict v;
            v.phash = story_id;
            v.verdict = verdict;
            v.checked_at = std::chrono::duration_cast<std::chrono::seconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
            store_->append_labels({v});
            std::unique_lock lock(verdict_mutex_);
            submitted_[story_id] = verdict;
            persisted = true;
        }
    }
    return json_response(200, json{{"story_id", id}, {"verdict", to_string(verdict)}, {"persisted", persisted}});
}

HttpResponse MonitorService::get_model(const ServiceSnapshot& snap) const {
    const TrainConfig& c = snap.model.config;
    json strategies = json::array();
    for (Strategy s : kStrategies) strategies.push_back(to_string(s));
    return json_response(200, json{{"manifest_checksum", to_hex64(snap.model.manifest_checksum)},
                                   {"trained_at", snap.model.trained_at},
                                   {"strategies", strategies},
                                   {"features", snap.matrix.schema.size()},
                                   {"stories", snap.stories.size()},
                                   {"trees", snap.model.booster.trees.size()},
                                   {"config",
                                    {{"max_depth", c.max_depth},
                                     {"learning_rate", c.learning_rate},
                                     {"num_rounds", c.num_rounds},
                                     {"min_leaf", c.min_leaf}}}});
}

HttpResponse MonitorService::get_image(const ServiceSnapshot& snap, const std::string& id) const {
    auto it = snap.by_id.find(parse_story_id(id));
    if (it == snap.by_id.end()) throw Error("unknown_story", "no story " + id);
    if (config_.image_dir.empty()) throw Error("no_image", "image serving is disabled");
    for (const std::string& ref : snap.stories[it->second].image_refs) {
        if (ref.empty()) continue;
        const std::filesystem::path p(ref);
        auto found = contained(config_.image_dir, p);
        if (!found && p.is_absolute()) found = contained(config_.image_dir, p.filename());
        if (!found) continue;
        std::ifstream in(*found, std::ios::binary);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        HttpResponse r;
        r.content_type = image_type(*found);
        r.body = bytes.str();
        return r;
    }
    throw Error("no_image", "no image available for story " + id);
}

int MonitorService::bind() {
    server_ = std::make_unique<httplib::Server>();
    auto adapter = [this](const httplib::Request& req, httplib::Response& res) {
        HttpRequest r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) r.query.emplace(k, v);
        for (const auto& [k, v] : req.headers) r.headers.emplace(utf8::lower(k), v);
        r.body = req.body;
        HttpResponse out = handle(r);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    server_->Get(".*", adapter);
    server_->Post(".*", adapter);
    server_->Put(".*", adapter);
    server_->Delete(".*", adapter);
    if (config_.port == 0) {
        const int port = server_->bind_to_any_port(config_.bind_address);
        if (port < 0) throw Error("bind_failed", "cannot bind " + config_.bind_address);
        return port;
    }
    if (!server_->bind_to_port(config_.bind_address, config_.port))
        throw Error("bind_failed", "cannot bind " + config_.bind_address + ":" + std::to_string(config_.port));
    return config_.port;
}

void MonitorService::listen_after_bind() {
    if (!server_) throw Error("bind_failed", "bind() was not called");
    server_->listen_after_bind();
}

void MonitorService::listen() {
    bind();
    listen_after_bind();
}

void MonitorService::stop() {
    if (server_) server_->stop();
}

}  // namespace factrank
