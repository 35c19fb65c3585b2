#include "factrank/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "factrank/image_io.hpp"
#include "factrank/util.hpp"

namespace factrank {

using nlohmann::json;

namespace {

// Field names the store refuses outright; ids must arrive anonymized.
constexpr const char* kForbiddenFields[] = {"phone", "display_name"};

void check_forbidden(const json& j) {
    if (!j.is_object()) return;
    for (const char* name : kForbiddenFields)
        if (j.contains(name)) throw Error("forbidden_field", std::string("forbidden field ") + name);
    for (const auto& [_, v] : j.items()) check_forbidden(v);
}

double unit_score(const json& j, const char* what) {
    if (!j.is_number()) throw Error("bad_annotation", std::string(what) + " must be a number");
    const double v = j.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) throw Error("bad_annotation", std::string(what) + " outside [0,1]");
    return v;
}

std::vector<ScoredTag> tags_from_json(const json& j, const char* key, const char* score_key) {
    std::vector<ScoredTag> out;
    if (!j.contains(key)) return out;
    for (const auto& item : j.at(key)) {
        ScoredTag t;
        if (item.is_array() && item.size() == 2) {
            t.tag = item[0].get<std::string>();
            t.confidence = unit_score(item[1], key);
        } else {
            t.tag = item.at(item.contains("tag") ? "tag" : "entity").get<std::string>();
            if (item.contains(score_key)) t.confidence = unit_score(item.at(score_key), key);
        }
        out.push_back(std::move(t));
    }
    return out;
}

json tags_to_json(const std::vector<ScoredTag>& tags, const char* name_key, const char* score_key) {
    json arr = json::array();
    for (const auto& t : tags) arr.push_back({{name_key, t.tag}, {score_key, t.confidence}});
    return arr;
}

const std::string& required_string(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) throw Error("missing_field", std::string("missing ") + key);
    const auto& v = j.at(key);
    if (!v.is_string()) throw Error("bad_field", std::string(key) + " must be a string");
    if (v.get_ref<const std::string&>().empty()) throw Error("missing_field", std::string("missing ") + key);
    return v.get_ref<const std::string&>();
}

std::string optional_string(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return {};
    if (!j.at(key).is_string()) throw Error("bad_field", std::string(key) + " must be a string");
    return j.at(key).get<std::string>();
}

}  // namespace

std::string to_string(Verdict v) { return v == Verdict::fake ? "fake" : "unchecked"; }

Verdict parse_verdict(std::string_view s) {
    if (s == "fake") return Verdict::fake;
    if (s == "unchecked") return Verdict::unchecked;
    throw Error("bad_verdict", "verdict must be 'fake' or 'unchecked', got '" + std::string(s) + "'");
}

std::string LabelVerdict::key() const { return phash ? to_hex64(*phash) : image_ref; }

std::string ImageStory::id_hex() const { return to_hex64(story_id); }

bool AnnotationBundle::empty() const {
    return !face_count && labels.empty() && objects.empty() && dominant_colors.empty() && !safe_search &&
           web_matches.empty() && !toxicity && web_entities.empty() && best_guess_label.empty();
}

void AnnotationBundle::merge_missing(const AnnotationBundle& o) {
    if (!face_count) face_count = o.face_count;
    if (labels.empty()) labels = o.labels;
    if (objects.empty()) objects = o.objects;
    if (dominant_colors.empty()) dominant_colors = o.dominant_colors;
    if (!safe_search) safe_search = o.safe_search;
    if (web_matches.empty()) {
        web_matches = o.web_matches;
        web_unreachable = o.web_unreachable;
    }
    if (!toxicity) toxicity = o.toxicity;
    if (web_entities.empty()) web_entities = o.web_entities;
    if (best_guess_label.empty()) best_guess_label = o.best_guess_label;
}

bool valid_url(std::string_view url) {
    std::string_view rest;
    if (starts_with_ci(url, "https://")) rest = url.substr(8);
    else if (starts_with_ci(url, "http://")) rest = url.substr(7);
    else return false;
    const size_t end = rest.find_first_of("/?#");
    std::string_view host = rest.substr(0, end);
    if (const size_t colon = host.find(':'); colon != std::string_view::npos) host = host.substr(0, colon);
    if (host.empty() || host.front() == '.' || host.back() == '.') return false;
    for (char c : host) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '-' || c == '.';
        if (!ok) return false;
    }
    for (char c : url)
        if (c == ' ' || c == '\t' || c == '\n') return false;
    return true;
}

AnnotationBundle annotations_from_json(const json& j) {
    if (!j.is_object()) throw Error("bad_annotation", "annotations must be an object");
    AnnotationBundle a;
    if (j.contains("face_count")) {
        const auto& f = j.at("face_count");
        if (!f.is_number_integer() || f.get<int64_t>() < 0)
            throw Error("bad_annotation", "face_count must be a non-negative integer");
        a.face_count = f.get<int>();
    }
    a.labels = tags_from_json(j, "labels", "confidence");
    a.objects = tags_from_json(j, "objects", "confidence");
    if (j.contains("dominant_colors")) {
        for (const auto& c : j.at("dominant_colors")) {
            ColorShare cs;
            const auto& rgb = c.at("rgb");
            if (!rgb.is_array() || rgb.size() != 3) throw Error("bad_annotation", "rgb must have 3 components");
            for (int k = 0; k < 3; ++k) {
                const int v = rgb[k].get<int>();
                if (v < 0 || v > 255) throw Error("bad_annotation", "rgb component outside [0,255]");
                (k == 0 ? cs.r : k == 1 ? cs.g : cs.b) = static_cast<uint8_t>(v);
            }
            cs.fraction = unit_score(c.at("fraction"), "dominant_colors.fraction");
            a.dominant_colors.push_back(cs);
        }
    }
    if (j.contains("safe_search")) {
        const auto& s = j.at("safe_search");
        SafeSearch ss;
        auto get = [&](const char* k) { return s.contains(k) ? unit_score(s.at(k), k) : 0.0; };
        ss.adult = get("adult");
        ss.spoof = get("spoof");
        ss.medical = get("medical");
        ss.violence = get("violence");
        ss.racy = get("racy");
        a.safe_search = ss;
    }
    if (j.contains("web_matches")) {
        for (const auto& u : j.at("web_matches")) {
            const auto url = u.get<std::string>();
            if (!valid_url(url)) throw Error("bad_annotation", "invalid web_matches URL '" + url + "'");
            a.web_matches.push_back(url);
        }
    }
    if (j.contains("web_unreachable")) {
        for (const auto& u : j.at("web_unreachable")) a.web_unreachable.push_back(u.get<std::string>());
    }
    if (j.contains("toxicity") && !j.at("toxicity").is_null()) a.toxicity = unit_score(j.at("toxicity"), "toxicity");
    a.web_entities = tags_from_json(j, "web_entities", "score");
    a.best_guess_label = optional_string(j, "best_guess_label");
    return a;
}

json annotations_to_json(const AnnotationBundle& a) {
    json j = json::object();
    if (a.face_count) j["face_count"] = *a.face_count;
    if (!a.labels.empty()) j["labels"] = tags_to_json(a.labels, "tag", "confidence");
    if (!a.objects.empty()) j["objects"] = tags_to_json(a.objects, "tag", "confidence");
    if (!a.dominant_colors.empty()) {
        json arr = json::array();
        for (const auto& c : a.dominant_colors)
            arr.push_back({{"rgb", {c.r, c.g, c.b}}, {"fraction", c.fraction}});
        j["dominant_colors"] = arr;
    }
    if (a.safe_search) {
        const auto& s = *a.safe_search;
        j["safe_search"] = {{"adult", s.adult},       {"spoof", s.spoof}, {"medical", s.medical},
                            {"violence", s.violence}, {"racy", s.racy}};
    }
    if (!a.web_matches.empty()) j["web_matches"] = a.web_matches;
    if (!a.web_unreachable.empty()) j["web_unreachable"] = a.web_unreachable;
    if (a.toxicity) j["toxicity"] = *a.toxicity;
    if (!a.web_entities.empty()) j["web_entities"] = tags_to_json(a.web_entities, "entity", "score");
    if (!a.best_guess_label.empty()) j["best_guess_label"] = a.best_guess_label;
    return j;
}

MessageRecord record_from_json(const json& j) {
    if (!j.is_object()) throw Error("bad_record", "record must be a JSON object");
    check_forbidden(j);
    MessageRecord r;
    r.message_id = required_string(j, "message_id");
    if (!j.contains("timestamp")) throw Error("missing_field", "missing timestamp");
    if (!j.at("timestamp").is_number_integer()) throw Error("bad_field", "timestamp must be an integer");
    r.timestamp = j.at("timestamp").get<int64_t>();
    if (r.timestamp <= 0) throw Error("bad_field", "timestamp must be positive");
    r.group_id = required_string(j, "group_id");
    r.user_id = required_string(j, "user_id");
    r.group_name = optional_string(j, "group_name");
    r.image_ref = optional_string(j, "image_ref");
    r.ocr_text = optional_string(j, "ocr_text");
    if (j.contains("annotations") && !j.at("annotations").is_null())
        r.annotations = annotations_from_json(j.at("annotations"));
    if (j.contains("phash") && !j.at("phash").is_null()) {
        if (!j.at("phash").is_string()) throw Error("bad_field", "phash must be a hex string");
        r.phash = parse_hex64(j.at("phash").get_ref<const std::string&>());
    }
    if (r.image_ref.empty() && !r.phash) throw Error("missing_field", "missing image_ref and phash");
    return r;
}

json record_to_json(const MessageRecord& r) {
    json j = {{"message_id", r.message_id}, {"timestamp", r.timestamp}, {"group_id", r.group_id},
              {"user_id", r.user_id},       {"image_ref", r.image_ref}, {"ocr_text", r.ocr_text}};
    if (!r.group_name.empty()) j["group_name"] = r.group_name;
    if (r.annotations) j["annotations"] = annotations_to_json(*r.annotations);
    if (r.phash) j["phash"] = to_hex64(*r.phash);
    return j;
}

LabelVerdict verdict_from_json(const json& j) {
    if (!j.is_object()) throw Error("bad_label", "label must be a JSON object");
    check_forbidden(j);
    LabelVerdict v;
    if (j.contains("phash") && !j.at("phash").is_null()) v.phash = parse_hex64(j.at("phash").get<std::string>());
    v.image_ref = optional_string(j, "image_ref");
    if (!v.phash && v.image_ref.empty()) throw Error("missing_field", "missing phash or image_ref");
    v.verdict = parse_verdict(j.value("verdict", std::string("fake")));
    v.source_url = optional_string(j, "source_url");
    if (j.contains("checked_at") && j.at("checked_at").is_number_integer())
        v.checked_at = j.at("checked_at").get<int64_t>();
    return v;
}

json verdict_to_json(const LabelVerdict& v) {
    json j = json::object();
    if (v.phash) j["phash"] = to_hex64(*v.phash);
    if (!v.image_ref.empty()) j["image_ref"] = v.image_ref;
    j["verdict"] = to_string(v.verdict);
    if (!v.source_url.empty()) j["source_url"] = v.source_url;
    if (v.checked_at) j["checked_at"] = *v.checked_at;
    return j;
}

json IngestSummary::to_json() const {
    json rej = json::array();
    for (const auto& r : rejected) rej.push_back({{"line", r.line}, {"reason", r.reason}});
    return {{"accepted", accepted}, {"duplicates", duplicates}, {"rejected", rejected.size()}, {"rejections", rej}};
}

CorpusStats CorpusStats::from_records(const std::vector<MessageRecord>& records) {
    CorpusStats stats;
    std::set<std::pair<std::string, std::string>> user_group;
    for (const auto& r : records) {
        ++stats.user_messages[r.user_id];
        ++stats.group_messages[r.group_id];
        if (user_group.emplace(r.user_id, r.group_id).second) ++stats.user_groups[r.user_id];
        if (!r.group_name.empty()) stats.group_names.try_emplace(r.group_id, r.group_name);
    }
    return stats;
}

CorpusStore::CorpusStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (!std::filesystem::is_directory(dir_)) throw Error("io", "cannot create corpus directory " + dir_.string());
    load();
}

void CorpusStore::load() {
    if (std::ifstream in(records_path()); in) {
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto rec = record_from_json(json::parse(line));
            message_ids_.insert(rec.message_id);
            records_.push_back(std::move(rec));
        }
    }
    if (std::ifstream in(labels_path()); in) {
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            labels_.push_back(verdict_from_json(json::parse(line)));
        }
    }
}

bool CorpusStore::has_index() const { return std::filesystem::exists(index_path()); }

IngestSummary CorpusStore::ingest(std::istream& source) {
    if (!source) throw Error("io", "unreadable ingest source");
    std::ofstream log(records_path(), std::ios::app);
    if (!log) throw Error("io", "cannot write " + records_path().string());

    IngestSummary summary;
    std::string line;
    size_t lineno = 0;
    while (std::getline(source, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            auto rec = record_from_json(j);
            if (message_ids_.contains(rec.message_id)) {
                ++summary.duplicates;
                continue;
            }
            log << record_to_json(rec).dump() << '\n';
            message_ids_.insert(rec.message_id);
            records_.push_back(std::move(rec));
            ++summary.accepted;
        } catch (const json::exception& e) {
            summary.rejected.push_back({lineno, std::string("malformed JSON: ") + e.what()});
        } catch (const Error& e) {
            summary.rejected.push_back({lineno, e.what()});
        }
    }
    if (source.bad()) throw Error("io", "read error on ingest source");
    log.flush();
    return summary;
}

IngestSummary CorpusStore::ingest_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path.string());
    return ingest(in);
}

namespace {

struct StoryLookup {
    std::unordered_map<uint64_t, size_t> by_hash;
    std::unordered_map<std::string, size_t> by_image_ref;
};

StoryLookup make_lookup(const std::vector<ImageStory>& stories, const std::vector<MessageRecord>& records,
                        const std::unordered_map<std::string, uint64_t>& member_hash) {
    StoryLookup lk;
    std::unordered_map<std::string, size_t> by_message;
    for (size_t s = 0; s < stories.size(); ++s) {
        lk.by_hash.emplace(stories[s].story_id, s);
        for (const auto& e : stories[s].share_events) by_message.emplace(e.message_id, s);
    }
    for (const auto& r : records) {
        auto it = by_message.find(r.message_id);
        if (it == by_message.end()) continue;
        if (auto h = member_hash.find(r.message_id); h != member_hash.end()) lk.by_hash.emplace(h->second, it->second);
        if (!r.image_ref.empty()) lk.by_image_ref.emplace(r.image_ref, it->second);
    }
    return lk;
}

std::optional<size_t> find_story(const StoryLookup& lk, const LabelVerdict& v) {
    if (v.phash) {
        if (auto it = lk.by_hash.find(*v.phash); it != lk.by_hash.end()) return it->second;
    }
    if (!v.image_ref.empty()) {
        if (auto it = lk.by_image_ref.find(v.image_ref); it != lk.by_image_ref.end()) return it->second;
    }
    return std::nullopt;
}

LabelSummary apply_with_lookup(std::vector<ImageStory>& stories, const std::vector<LabelVerdict>& verdicts,
                               const StoryLookup& lk) {
    LabelSummary summary;
    std::unordered_map<size_t, Verdict> seen;
    std::set<std::string> conflicted;
    for (const auto& v : verdicts) {
        const auto s = find_story(lk, v);
        if (!s) {
            ++summary.unmatched;
            continue;
        }
        ++summary.matched;
        auto [it, inserted] = seen.emplace(*s, v.verdict);
        if (!inserted && it->second != v.verdict) {
            conflicted.insert(stories[*s].id_hex());
            it->second = v.verdict;
        }
        stories[*s].verdict = v.verdict;
        stories[*s].verdict_source = v.source_url;
    }
    summary.conflicts.assign(conflicted.begin(), conflicted.end());
    return summary;
}

}  // namespace

LabelSummary apply_verdicts(std::vector<ImageStory>& stories, const std::vector<LabelVerdict>& verdicts,
                            const std::unordered_map<uint64_t, size_t>& by_member_hash) {
    StoryLookup lk;
    lk.by_hash = by_member_hash;
    for (size_t s = 0; s < stories.size(); ++s) {
        lk.by_hash.emplace(stories[s].story_id, s);
        for (const auto& ref : stories[s].image_refs) lk.by_image_ref.emplace(ref, s);
    }
    return apply_with_lookup(stories, verdicts, lk);
}

namespace {

AssemblyResult assemble_groups(const std::vector<MessageRecord>& records_, const std::vector<LabelVerdict>& labels_,
                               const std::map<uint64_t, std::vector<size_t>>& groups,
                               const std::vector<std::optional<uint64_t>>& hashes, std::vector<Rejection> excluded) {
    AssemblyResult result;
    result.excluded = std::move(excluded);
    std::unordered_map<std::string, uint64_t> member_hash;
    for (size_t i = 0; i < records_.size(); ++i)
        if (hashes[i]) member_hash.emplace(records_[i].message_id, *hashes[i]);

    result.stories.reserve(groups.size());
    for (const auto& [canonical, members] : groups) {
        ImageStory story;
        story.story_id = canonical;
        // Members arrive in ingestion order, which drives annotation merging.
        for (size_t idx : members) {
            const auto& r = records_[idx];
            story.share_events.push_back({r.timestamp, r.group_id, r.user_id, r.message_id});
            if (r.ocr_text.size() > story.ocr_text.size()) story.ocr_text = r.ocr_text;
            if (r.annotations) story.annotations.merge_missing(*r.annotations);
            if (!r.image_ref.empty() &&
                std::find(story.image_refs.begin(), story.image_refs.end(), r.image_ref) == story.image_refs.end())
                story.image_refs.push_back(r.image_ref);
        }
        std::stable_sort(story.share_events.begin(), story.share_events.end(),
                         [](const ShareEvent& a, const ShareEvent& b) {
                             if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                             return a.message_id < b.message_id;
                         });
        result.stories.push_back(std::move(story));
    }
    const auto lk = make_lookup(result.stories, records_, member_hash);
    result.labels = apply_with_lookup(result.stories, labels_, lk);
    return result;
}

// Exact grouping on the records' own hashes.
AssemblyResult assemble_exact(const std::vector<MessageRecord>& records, const std::vector<LabelVerdict>& labels) {
    std::vector<std::optional<uint64_t>> hashes(records.size());
    std::map<uint64_t, std::vector<size_t>> groups;
    std::vector<Rejection> excluded;
    std::vector<uint64_t> flat;
    std::vector<size_t> owner;
    for (size_t i = 0; i < records.size(); ++i) {
        if (records[i].phash) {
            hashes[i] = records[i].phash;
            flat.push_back(*records[i].phash);
            owner.push_back(i);
        } else {
            excluded.push_back({i, "unresolvable hash for " + records[i].message_id});
        }
    }
    for (auto& [canonical, members] : group_by_hash(flat, GroupingMode::exact)) {
        auto& out = groups[canonical];
        for (size_t m : members) out.push_back(owner[m]);
    }
    return assemble_groups(records, labels, groups, hashes, std::move(excluded));
}

}  // namespace

AssemblyResult assemble_records(const std::vector<MessageRecord>& records, const std::vector<LabelVerdict>& labels) {
    return assemble_exact(records, labels);
}

AssemblyResult CorpusStore::assemble(const std::map<uint64_t, std::vector<size_t>>& groups,
                                     const std::vector<std::optional<uint64_t>>& hashes,
                                     std::vector<Rejection> excluded) const {
    return assemble_groups(records_, labels_, groups, hashes, std::move(excluded));
}

AssemblyResult CorpusStore::build_index(const GroupingOptions& options) {
    std::vector<std::optional<uint64_t>> hashes(records_.size());
    std::vector<Rejection> excluded;
    // Several records usually point at the same file; hash each file once.
    std::unordered_map<std::string, std::optional<uint64_t>> file_cache;
    for (size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.phash) {
            hashes[i] = r.phash;
            continue;
        }
        auto [it, fresh] = file_cache.try_emplace(r.image_ref);
        if (fresh) {
            std::filesystem::path p = r.image_ref;
            if (p.is_relative() && !options.image_root.empty()) p = options.image_root / p;
            try {
                it->second = phash(load_image(p)).bits;
            } catch (const Error& e) {
                excluded.push_back({i, "unresolvable hash for " + r.message_id + ": " + e.what()});
                continue;
            }
        }
        if (it->second) hashes[i] = it->second;
        else excluded.push_back({i, "unresolvable hash for " + r.message_id});
    }

    std::vector<uint64_t> flat;
    std::vector<size_t> owner;
    for (size_t i = 0; i < hashes.size(); ++i)
        if (hashes[i]) {
            flat.push_back(*hashes[i]);
            owner.push_back(i);
        }
    std::map<uint64_t, std::vector<size_t>> groups;
    for (auto& [canonical, members] : group_by_hash(flat, options.mode, options.distance)) {
        auto& out = groups[canonical];
        for (size_t m : members) out.push_back(owner[m]);
    }

    std::ofstream idx(index_path(), std::ios::trunc);
    if (!idx) throw Error("io", "cannot write " + index_path().string());
    for (const auto& [canonical, members] : groups) {
        json m = json::array(), h = json::array();
        for (size_t i : members) {
            m.push_back(records_[i].message_id);
            h.push_back(to_hex64(*hashes[i]));
        }
        idx << json{{"story_id", to_hex64(canonical)}, {"members", m}, {"hashes", h}}.dump() << '\n';
    }
    return assemble(groups, hashes, std::move(excluded));
}

AssemblyResult CorpusStore::assemble_stories() const {
    std::vector<std::optional<uint64_t>> hashes(records_.size());
    std::map<uint64_t, std::vector<size_t>> groups;
    std::vector<Rejection> excluded;

    std::ifstream idx(index_path());
    if (idx) {
        std::unordered_map<std::string, size_t> by_id;
        for (size_t i = 0; i < records_.size(); ++i) by_id.emplace(records_[i].message_id, i);
        std::string line;
        while (std::getline(idx, line)) {
            if (trim(line).empty()) continue;
            const json j = json::parse(line);
            const uint64_t canonical = parse_hex64(j.at("story_id").get<std::string>());
            const auto& members = j.at("members");
            const auto& member_hashes = j.at("hashes");
            for (size_t k = 0; k < members.size(); ++k) {
                auto it = by_id.find(members[k].get<std::string>());
                if (it == by_id.end()) continue;
                hashes[it->second] = parse_hex64(member_hashes[k].get<std::string>());
                groups[canonical].push_back(it->second);
            }
        }
        for (auto& [_, m] : groups) std::sort(m.begin(), m.end());
        // Records ingested after the last dedup run are not part of any story yet.
        for (size_t i = 0; i < records_.size(); ++i)
            if (!hashes[i]) excluded.push_back({i, "record " + records_[i].message_id + " not in story index"});
        return assemble(groups, hashes, std::move(excluded));
    }

    return assemble_exact(records_, labels_);
}

void CorpusStore::append_labels(const std::vector<LabelVerdict>& verdicts) {
    std::ofstream log(labels_path(), std::ios::app);
    if (!log) throw Error("io", "cannot write " + labels_path().string());
    for (const auto& v : verdicts) {
        log << verdict_to_json(v).dump() << '\n';
        labels_.push_back(v);
    }
    log.flush();
    if (!log) throw Error("io", "failed writing " + labels_path().string());
}

LabelSummary CorpusStore::attach_labels(const std::vector<LabelVerdict>& verdicts) {
    append_labels(verdicts);

    auto assembled = assemble_stories();
    // Matches are counted for this batch only; conflicts cover the whole log.
    std::unordered_map<uint64_t, size_t> by_hash;
    {
        std::ifstream idx(index_path());
        std::string line;
        std::unordered_map<uint64_t, size_t> pos;
        for (size_t s = 0; s < assembled.stories.size(); ++s) pos.emplace(assembled.stories[s].story_id, s);
        while (idx && std::getline(idx, line)) {
            if (trim(line).empty()) continue;
            const json j = json::parse(line);
            const size_t s = pos.at(parse_hex64(j.at("story_id").get<std::string>()));
            for (const auto& h : j.at("hashes")) by_hash.emplace(parse_hex64(h.get<std::string>()), s);
        }
    }
    auto summary = apply_verdicts(assembled.stories, verdicts, by_hash);
    summary.conflicts = assembled.labels.conflicts;
    return summary;
}

LabelSummary CorpusStore::attach_labels_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path.string());
    std::vector<LabelVerdict> verdicts;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            verdicts.push_back(verdict_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw Error("bad_label", "label line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return attach_labels(verdicts);
}

}  // namespace factrank
