#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "factrank/corpus.hpp"
#include "factrank/features.hpp"
#include "factrank/gbdt.hpp"
#include "factrank/lexicon.hpp"
#include "factrank/ranking.hpp"

namespace httplib {
class Server;
}

namespace factrank {

struct ServiceConfig {
    std::string bind_address = "127.0.0.1";
    int port = 8080;
    std::filesystem::path corpus;
    std::filesystem::path model;
    std::filesystem::path lexicon;
    std::filesystem::path image_dir;  // images are only ever served from here
    std::vector<std::string> tokens;
    size_t page_limit = 500;

    // Throws Error("bad_config") when no token is set or the page limit is
    // outside [1, 500].
    void validate() const;
};

struct HttpRequest {
    std::string method = "GET";
    std::string path;
    std::map<std::string, std::string> query;
    std::map<std::string, std::string> headers;  // lower-case names
    std::string body;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

// "low" below 0.33, "medium" below 0.66, "high" otherwise.
std::string thermometer(double score);

// Field names that must never appear in a response.
bool is_pii_field(std::string_view name);
// JSON-pointer-like paths of offending fields or values. `raw_ids` holds
// identifiers that may not be echoed verbatim.
std::vector<std::string> pii_violations(const nlohmann::json& body, const std::unordered_set<std::string>& raw_ids);

/// Read-only corpus + model view the endpoints answer from. Swapped as a
/// whole on reload.
struct ServiceSnapshot {
    std::vector<ImageStory> stories;
    FeatureMatrix matrix;
    FakenessModel model;
    std::vector<double> margins;
    std::unordered_map<uint64_t, size_t> by_id;
    std::map<std::string, std::vector<size_t>> by_first_date;
    std::vector<std::string> dates;
    std::unordered_set<std::string> raw_ids;
};

/// HTTP API of the monitor. `handle` is transport independent; `listen`
/// wires it to a cpp-httplib server.
///
///   GET  /api/dates
///   GET  /api/rank?date=YYYY-MM-DD&strategy=&k=&page=
///   GET  /api/stories/{id}
///   POST /api/labels         {"story_id": "...", "verdict": "fake"|"unchecked"}
///   GET  /api/model
///   GET  /api/images/{id}
///
/// Every /api request needs "Authorization: Bearer <token>". Errors are
/// {"code": ..., "message": ...}.
class MonitorService {
public:
    explicit MonitorService(ServiceConfig config);
    ~MonitorService();

    HttpResponse handle(const HttpRequest& request);

    // Rebuilds the snapshot from disk and swaps it in.
    void reload();
    std::shared_ptr<const ServiceSnapshot> snapshot() const;

    // Blocks until stop(). Throws Error("bind_failed").
    void listen();
    // Binds (port 0 = any free port) and returns the port; serve in
    // another thread with listen_after_bind().
    int bind();
    void listen_after_bind();
    void stop();

    nlohmann::json story_detail(const ServiceSnapshot& snap, size_t index) const;

private:
    HttpResponse route(const HttpRequest& request);
    HttpResponse get_dates(const ServiceSnapshot& snap) const;
    HttpResponse get_rank(const ServiceSnapshot& snap, const HttpRequest& request) const;
    HttpResponse get_story(const ServiceSnapshot& snap, const std::string& id) const;
    HttpResponse post_label(const ServiceSnapshot& snap, const HttpRequest& request);
    HttpResponse get_model(const ServiceSnapshot& snap) const;
    HttpResponse get_image(const ServiceSnapshot& snap, const std::string& id) const;
    bool authorized(const HttpRequest& request) const;
    Verdict verdict_of(const ServiceSnapshot& snap, size_t index) const;

    ServiceConfig config_;
    LexiconConfig lexicon_;
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const ServiceSnapshot> snapshot_;
    // Verdicts submitted since the snapshot was built.
    mutable std::shared_mutex verdict_mutex_;
    std::unordered_map<uint64_t, Verdict> submitted_;
    std::mutex writer_mutex_;
    std::unique_ptr<CorpusStore> store_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace factrank
