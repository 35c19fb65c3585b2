#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "factrank/phash.hpp"

namespace factrank {

struct ScoredTag {
    std::string tag;
    double confidence = 0.0;
};

struct ColorShare {
    uint8_t r = 0, g = 0, b = 0;
    double fraction = 0.0;
};

struct SafeSearch {
    double adult = 0.0;
    double spoof = 0.0;
    double medical = 0.0;
    double violence = 0.0;
    double racy = 0.0;
};

/// Vision / toxicity annotations of one image. Scalars are optional so that
/// merging can distinguish "absent" from "zero".
struct AnnotationBundle {
    std::optional<int> face_count;
    std::vector<ScoredTag> labels;
    std::vector<ScoredTag> objects;
    std::vector<ColorShare> dominant_colors;
    std::optional<SafeSearch> safe_search;
    std::vector<std::string> web_matches;
    // Subset of web_matches known to be unreachable.
    std::vector<std::string> web_unreachable;
    std::optional<double> toxicity;
    std::vector<ScoredTag> web_entities;
    std::string best_guess_label;

    bool empty() const;
    // Field-wise merge: fields already set on *this are kept.
    void merge_missing(const AnnotationBundle& other);
};

struct MessageRecord {
    std::string message_id;
    int64_t timestamp = 0;
    std::string group_id;
    std::string user_id;
    std::string group_name;
    std::string image_ref;
    std::string ocr_text;
    std::optional<AnnotationBundle> annotations;
    std::optional<uint64_t> phash;
};

enum class Verdict { unchecked, fake };

std::string to_string(Verdict v);
Verdict parse_verdict(std::string_view s);

struct LabelVerdict {
    std::optional<uint64_t> phash;
    std::string image_ref;
    Verdict verdict = Verdict::fake;
    std::string source_url;
    std::optional<int64_t> checked_at;

    std::string key() const;
};

struct ShareEvent {
    int64_t timestamp = 0;
    std::string group_id;
    std::string user_id;
    std::string message_id;
};

struct ImageStory {
    uint64_t story_id = 0;
    std::vector<ShareEvent> share_events;  // ascending by timestamp
    std::string ocr_text;
    AnnotationBundle annotations;
    Verdict verdict = Verdict::unchecked;
    std::string verdict_source;
    std::vector<std::string> image_refs;

    std::string id_hex() const;
    const ShareEvent& first_share() const { return share_events.front(); }
};

/// Per-user and per-group totals over the whole corpus, needed by the
/// publisher features.
struct CorpusStats {
    std::unordered_map<std::string, int64_t> user_messages;
    std::unordered_map<std::string, int64_t> group_messages;
    std::unordered_map<std::string, int64_t> user_groups;
    std::unordered_map<std::string, std::string> group_names;

    static CorpusStats from_records(const std::vector<MessageRecord>& records);
};

// JSON wire format.
MessageRecord record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const MessageRecord& r);
AnnotationBundle annotations_from_json(const nlohmann::json& j);
nlohmann::json annotations_to_json(const AnnotationBundle& a);
LabelVerdict verdict_from_json(const nlohmann::json& j);
nlohmann::json verdict_to_json(const LabelVerdict& v);

bool valid_url(std::string_view url);

struct Rejection {
    size_t line = 0;
    std::string reason;
};

struct IngestSummary {
    size_t accepted = 0;
    size_t duplicates = 0;
    std::vector<Rejection> rejected;

    nlohmann::json to_json() const;
};

struct LabelSummary {
    size_t matched = 0;
    size_t unmatched = 0;
    // Keys that received contradicting verdicts; the latest one is applied.
    std::vector<std::string> conflicts;
};

struct GroupingOptions {
    GroupingMode mode = GroupingMode::exact;
    int distance = 4;
    // Directory that relative image_ref paths resolve against.
    std::filesystem::path image_root;
};

struct AssemblyResult {
    std::vector<ImageStory> stories;  // ascending by story_id
    std::vector<Rejection> excluded;  // line = record index
    LabelSummary labels;
};

/// Append-only record and label logs plus a rebuildable story index, all
/// kept in one directory:
///
///   records.jsonl      accepted message records
///   labels.jsonl       label verdicts in submission order
///   story_index.jsonl  {story_id, members, hashes} per story, written by dedup
///
/// Not thread-safe; callers serialize writers.
class CorpusStore {
public:
    explicit CorpusStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    IngestSummary ingest(std::istream& source);
    IngestSummary ingest_file(const std::filesystem::path& path);

    // Appends verdicts to the label log and reports how many match a story
    // of the current index.
    LabelSummary attach_labels(const std::vector<LabelVerdict>& verdicts);
    LabelSummary attach_labels_file(const std::filesystem::path& path);
    // Appends to the label log without matching.
    void append_labels(const std::vector<LabelVerdict>& verdicts);

    // Resolves hashes, groups records into stories and persists the index.
    AssemblyResult build_index(const GroupingOptions& options);

    // Stories from the persisted index, or an in-memory exact grouping when
    // no index has been built yet. Verdicts from the label log are applied.
    AssemblyResult assemble_stories() const;

    const std::vector<MessageRecord>& records() const { return records_; }
    const std::vector<LabelVerdict>& labels() const { return labels_; }
    bool has_index() const;

private:
    std::filesystem::path records_path() const { return dir_ / "records.jsonl"; }
    std::filesystem::path labels_path() const { return dir_ / "labels.jsonl"; }
    std::filesystem::path index_path() const { return dir_ / "story_index.jsonl"; }

    void load();
    AssemblyResult assemble(const std::map<uint64_t, std::vector<size_t>>& groups,
                            const std::vector<std::optional<uint64_t>>& hashes,
                            std::vector<Rejection> excluded) const;

    std::filesystem::path dir_;
    std::vector<MessageRecord> records_;
    std::unordered_set<std::string> message_ids_;
    std::vector<LabelVerdict> labels_;
};

// In-memory counterpart of CorpusStore::assemble_stories without an index:
// records are grouped by exact hash and the verdicts applied in order.
AssemblyResult assemble_records(const std::vector<MessageRecord>& records, const std::vector<LabelVerdict>& labels);

/// Applies verdicts in order to the stories (last verdict per story wins).
LabelSummary apply_verdicts(std::vector<ImageStory>& stories,
                            const std::vector<LabelVerdict>& verdicts,
                            const std::unordered_map<uint64_t, size_t>& by_member_hash);

}  // namespace factrank
