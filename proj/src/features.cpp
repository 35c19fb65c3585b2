#include "factrank/features.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "factrank/text_stats.hpp"
#include "factrank/util.hpp"

namespace factrank {

namespace {

constexpr std::array<const char*, 9> kImageFeatures = {
    "img_faces",         "img_has_faces",  "img_count_labels",  "img_count_objects", "img_count_colors",
    "img_safe_adult",    "img_safe_spoof", "img_safe_violence", "img_safe_racy"};

constexpr std::array<const char*, 8> kSemanticFeatures = {
    "toxicity", "web_entity_count", "web_entity_top_score", "best_guess_tokens",
    "Bridge",   "dominant_label",   "entity_density",       "context_mismatch"};
constexpr size_t kDominantLabelOffset = 5;

constexpr std::array<const char*, 5> kPublisherFeatures = {
    "first_user", "first_group", "first_user_messages", "first_group_messages", "first_user_groups"};

constexpr std::array<const char*, 3> kBiasFeatures = {"political_bias_left", "political_bias_right",
                                                      "political_bias_mainstream"};

constexpr std::array<const char*, 3> kInternalFeatures = {"count_shares", "count_users", "count_groups"};

constexpr std::array<const char*, 5> kExternalFeatures = {
    "count_web_dissemination_urls", "web_dissem_accessible_links", "web_dissem_foreign_uncommon_domains",
    "web_dissem_secure_links", "web_dissem_distinct_domains"};

constexpr const char* kFamilyNames[] = {"content", "source", "environment"};
constexpr const char* kSetNames[] = {"image_properties",     "syntax",      "lexical",     "psycholinguistic",
                                     "semantic",             "subjectivity", "publisher",  "bias",
                                     "internal_propagation", "external_propagation", "temporal"};

const std::string kUnknown = "unknown";

std::string sanitize_category(std::string s) {
    for (char& c : s)
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    s = trim(s);
    return s.empty() ? kUnknown : s;
}

template <size_t N>
void add_block(std::vector<FeatureSpec>& out, const std::array<const char*, N>& names, FeatureFamily fam,
               FeatureSet set) {
    for (const char* n : names) out.push_back({n, fam, set, FeatureKind::numeric});
}

FeatureSchema make_standard() {
    std::vector<FeatureSpec> s;
    using F = FeatureFamily;
    using S = FeatureSet;
    add_block(s, kImageFeatures, F::content, S::image_properties);
    add_block(s, kSyntaxFeatures, F::content, S::syntax);
    add_block(s, kLexicalFeatures, F::content, S::lexical);
    add_block(s, kPsychCategories, F::content, S::psycholinguistic);
    const size_t semantic_start = s.size();
    add_block(s, kSemanticFeatures, F::content, S::semantic);
    s[semantic_start + kDominantLabelOffset].kind = FeatureKind::categorical;
    add_block(s, kSubjectivityFeatures, F::content, S::subjectivity);
    const size_t publisher_start = s.size();
    add_block(s, kPublisherFeatures, F::source, S::publisher);
    s[publisher_start].kind = FeatureKind::categorical;
    s[publisher_start + 1].kind = FeatureKind::categorical;
    add_block(s, kBiasFeatures, F::source, S::bias);
    add_block(s, kInternalFeatures, F::environment, S::internal_propagation);
    add_block(s, kExternalFeatures, F::environment, S::external_propagation);
    for (int64_t w : kTemporalWindows)
        s.push_back({"acc_" + std::to_string(w), F::environment, S::temporal, FeatureKind::numeric});
    for (int64_t w : kTemporalWindows)
        s.push_back({"rate_" + std::to_string(w), F::environment, S::temporal, FeatureKind::numeric});
    return FeatureSchema(std::move(s));
}

std::vector<std::string> folded_words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char32_t c : utf8::decode(text)) {
        if (utf8::is_letter(c) || utf8::is_digit(c)) {
            utf8::append(cur, utf8::fold(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

}  // namespace

std::string to_string(FeatureFamily f) { return kFamilyNames[static_cast<int>(f)]; }
std::string to_string(FeatureSet s) { return kSetNames[static_cast<int>(s)]; }
std::string to_string(FeatureKind k) { return k == FeatureKind::numeric ? "numeric" : "categorical"; }

FeatureSet parse_feature_set(std::string_view s) {
    for (size_t i = 0; i < kFeatureSetCount; ++i)
        if (s == kSetNames[i]) return static_cast<FeatureSet>(i);
    throw Error("bad_manifest", "unknown feature set '" + std::string(s) + "'");
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> specs) : specs_(std::move(specs)) {
    checksum_ = fnv1a64(manifest());
}

const FeatureSchema& FeatureSchema::standard() {
    static const FeatureSchema schema = make_standard();
    return schema;
}

std::string FeatureSchema::manifest() const {
    std::string out;
    for (const auto& s : specs_) {
        out += s.name;
        out += '\t';
        out += to_string(s.family);
        out += '\t';
        out += to_string(s.set);
        out += '\t';
        out += to_string(s.kind);
        out += '\n';
    }
    return out;
}

FeatureSchema FeatureSchema::parse_manifest(std::string_view text) {
    std::vector<FeatureSpec> specs;
    std::istringstream in{std::string(text)};
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto cols = split(line, '\t');
        if (cols.size() != 4) throw Error("bad_manifest", "manifest line " + std::to_string(lineno) + ": expected 4 columns");
        FeatureSpec spec;
        spec.name = cols[0];
        if (cols[1] == "content") spec.family = FeatureFamily::content;
        else if (cols[1] == "source") spec.family = FeatureFamily::source;
        else if (cols[1] == "environment") spec.family = FeatureFamily::environment;
        else throw Error("bad_manifest", "unknown family '" + cols[1] + "'");
        spec.set = parse_feature_set(cols[2]);
        if (cols[3] == "numeric") spec.kind = FeatureKind::numeric;
        else if (cols[3] == "categorical") spec.kind = FeatureKind::categorical;
        else throw Error("bad_manifest", "unknown kind '" + cols[3] + "'");
        specs.push_back(std::move(spec));
    }
    return FeatureSchema(std::move(specs));
}

FeatureSchema FeatureSchema::load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open manifest " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str());
}

std::optional<size_t> FeatureSchema::index_of(std::string_view name) const {
    for (size_t i = 0; i < specs_.size(); ++i)
        if (specs_[i].name == name) return i;
    return std::nullopt;
}

size_t FeatureSchema::require(std::string_view name) const {
    if (auto i = index_of(name)) return *i;
    throw Error("unknown_feature", "no feature named '" + std::string(name) + "'");
}

std::array<size_t, kFeatureSetCount> FeatureSchema::set_counts() const {
    std::array<size_t, kFeatureSetCount> counts{};
    for (const auto& s : specs_) ++counts[static_cast<size_t>(s.set)];
    return counts;
}

std::vector<int> FeatureMatrix::labels() const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.label);
    return out;
}

std::string url_host(std::string_view url) {
    std::string_view rest;
    if (starts_with_ci(url, "https://")) rest = url.substr(8);
    else if (starts_with_ci(url, "http://")) rest = url.substr(7);
    else return {};
    std::string_view host = rest.substr(0, rest.find_first_of("/?#"));
    if (const auto at = host.rfind('@'); at != std::string_view::npos) host = host.substr(at + 1);
    host = host.substr(0, host.find(':'));
    std::string out(host);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c += 32;
    return out;
}

bool is_common_domain(std::string_view host) {
    for (const char* suffix : kCommonSuffixes)
        if (host.ends_with(suffix)) return true;
    return false;
}

std::vector<FeatureValue> extract_content(const ImageStory& story, const LexiconConfig& lexicon) {
    std::vector<FeatureValue> out;
    out.reserve(kContentSlots);
    const auto& a = story.annotations;

    const double faces = a.face_count.value_or(0);
    const SafeSearch ss = a.safe_search.value_or(SafeSearch{});
    for (double v : {faces, faces > 0 ? 1.0 : 0.0, static_cast<double>(a.labels.size()),
                     static_cast<double>(a.objects.size()), static_cast<double>(a.dominant_colors.size()), ss.adult,
                     ss.spoof, ss.violence, ss.racy})
        out.emplace_back(v);

    const TextAnalysis text = analyze_text(story.ocr_text, lexicon);
    for (double v : syntax_block(text)) out.emplace_back(v);
    for (double v : lexical_block(text, lexicon)) out.emplace_back(v);
    for (double v : psych_block(text, lexicon)) out.emplace_back(v);

    // Semantic structure.
    double top_entity = 0.0;
    std::unordered_set<std::string> entity_words;
    for (const auto& e : a.web_entities) {
        top_entity = std::max(top_entity, e.confidence);
        for (auto& w : folded_words(e.tag)) entity_words.insert(std::move(w));
    }
    const std::unordered_set<std::string> ocr_words(text.folded.begin(), text.folded.end());
    double bridge = 0;
    for (const auto& w : ocr_words)
        if (entity_words.contains(w)) ++bridge;

    std::string dominant = kUnknown;
    double best_conf = -1.0;
    std::unordered_set<std::string> label_words;
    for (const auto& l : a.labels) {
        if (l.confidence > best_conf) {
            best_conf = l.confidence;
            dominant = sanitize_category(utf8::lower(l.tag));
        }
        for (auto& w : folded_words(l.tag)) label_words.insert(std::move(w));
    }
    for (const auto& o : a.objects)
        for (auto& w : folded_words(o.tag)) label_words.insert(std::move(w));
    bool overlap = false;
    for (const auto& w : ocr_words)
        if (label_words.contains(w)) overlap = true;
    const double mismatch = (!ocr_words.empty() && !label_words.empty() && !overlap) ? 1.0 : 0.0;
    const double entities = static_cast<double>(a.web_entities.size());
    const double words = static_cast<double>(text.words.size());

    out.emplace_back(a.toxicity.value_or(0.0));
    out.emplace_back(entities);
    out.emplace_back(top_entity);
    out.emplace_back(static_cast<double>(folded_words(a.best_guess_label).size()));
    out.emplace_back(bridge);
    out.emplace_back(dominant);
    out.emplace_back(words > 0 ? entities / words : 0.0);
    out.emplace_back(mismatch);

    for (double v : subjectivity_block(text, lexicon)) out.emplace_back(v);
    return out;
}

std::vector<FeatureValue> extract_source(const ImageStory& story, const CorpusStats& corpus,
                                         const LexiconConfig& lexicon) {
    const auto& first = story.first_share();
    auto lookup = [](const auto& map, const std::string& key) -> double {
        auto it = map.find(key);
        return it == map.end() ? 0.0 : static_cast<double>(it->second);
    };
    std::string group_name;
    if (auto it = corpus.group_names.find(first.group_id); it != corpus.group_names.end()) group_name = it->second;
    const Bias bias = lexicon.resolve_bias(first.group_id, group_name);

    std::vector<FeatureValue> out;
    out.reserve(kSourceSlots);
    out.emplace_back(sanitize_category(first.user_id));
    out.emplace_back(sanitize_category(first.group_id));
    out.emplace_back(lookup(corpus.user_messages, first.user_id));
    out.emplace_back(lookup(corpus.group_messages, first.group_id));
    out.emplace_back(lookup(corpus.user_groups, first.user_id));
    out.emplace_back(bias == Bias::left ? 1.0 : 0.0);
    out.emplace_back(bias == Bias::right ? 1.0 : 0.0);
    out.emplace_back(bias == Bias::mainstream ? 1.0 : 0.0);
    return out;
}

std::vector<FeatureValue> extract_environment(const ImageStory& story) {
    std::vector<FeatureValue> out;
    out.reserve(kEnvironmentSlots);

    std::unordered_set<std::string> users, groups;
    for (const auto& e : story.share_events) {
        users.insert(e.user_id);
        groups.insert(e.group_id);
    }
    out.emplace_back(static_cast<double>(story.share_events.size()));
    out.emplace_back(static_cast<double>(users.size()));
    out.emplace_back(static_cast<double>(groups.size()));

    const auto& a = story.annotations;
    const std::unordered_set<std::string> unreachable(a.web_unreachable.begin(), a.web_unreachable.end());
    double accessible = 0, secure = 0;
    std::set<std::string> domains, uncommon;
    for (const auto& url : a.web_matches) {
        if (!unreachable.contains(url)) ++accessible;
        if (starts_with_ci(url, "https://")) ++secure;
        const std::string host = url_host(url);
        if (host.empty()) continue;
        domains.insert(host);
        if (!is_common_domain(host)) uncommon.insert(host);
    }
    out.emplace_back(static_cast<double>(a.web_matches.size()));
    out.emplace_back(accessible);
    out.emplace_back(static_cast<double>(uncommon.size()));
    out.emplace_back(secure);
    out.emplace_back(static_cast<double>(domains.size()));

    // Shares are sorted, so each window count is an upper_bound.
    const int64_t t0 = story.first_share().timestamp;
    std::array<double, kTemporalWindows.size()> counts{};
    for (size_t k = 0; k < kTemporalWindows.size(); ++k) {
        const int64_t limit = t0 + kTemporalWindows[k];
        const auto it = std::upper_bound(story.share_events.begin(), story.share_events.end(), limit,
                                         [](int64_t t, const ShareEvent& e) { return t < e.timestamp; });
        counts[k] = static_cast<double>(it - story.share_events.begin());
    }
    for (double c : counts) out.emplace_back(c);
    for (size_t k = 0; k < counts.size(); ++k) out.emplace_back(counts[k] / static_cast<double>(kTemporalWindows[k]));
    return out;
}

FeatureVector extract_features(const ImageStory& story, const CorpusStats& corpus, const LexiconConfig& lexicon) {
    if (story.share_events.empty()) throw Error("bad_story", "story " + story.id_hex() + " has no share events");
    FeatureVector v;
    v.story_id = story.id_hex();
    v.values = extract_content(story, lexicon);
    for (auto& x : extract_source(story, corpus, lexicon)) v.values.push_back(std::move(x));
    for (auto& x : extract_environment(story)) v.values.push_back(std::move(x));
    v.label = story.verdict == Verdict::fake ? 1 : 0;
    return v;
}

FeatureMatrix build_matrix(const std::vector<ImageStory>& stories, const CorpusStats& corpus,
                           const LexiconConfig& lexicon) {
    FeatureMatrix m;
    m.schema = FeatureSchema::standard();
    m.rows.reserve(stories.size());
    for (const auto& s : stories) m.rows.push_back(extract_features(s, corpus, lexicon));
    return m;
}

void write_matrix_tsv(const FeatureMatrix& m, std::ostream& out) {
    out << "story_id\tlabel";
    for (const auto& s : m.schema.specs()) out << '\t' << s.name;
    out << '\n';
    for (const auto& r : m.rows) {
        out << r.story_id << '\t' << r.label;
        for (const auto& v : r.values) {
            out << '\t';
            if (const auto* d = std::get_if<double>(&v)) out << format_number(*d);
            else out << std::get<std::string>(v);
        }
        out << '\n';
    }
}

void save_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("io", "cannot write " + path.string());
    write_matrix_tsv(m, out);
}

FeatureMatrix read_matrix_tsv(std::istream& in, const FeatureSchema& schema) {
    FeatureMatrix m;
    m.schema = schema;
    std::string line;
    if (!std::getline(in, line)) throw Error("bad_features", "empty feature table");
    const auto header = split(line, '\t');
    if (header.size() != schema.size() + 2 || header[0] != "story_id" || header[1] != "label")
        throw Error("bad_features", "feature table header does not match the feature manifest");
    for (size_t i = 0; i < schema.size(); ++i)
        if (header[i + 2] != schema[i].name)
            throw Error("bad_features", "feature table column '" + header[i + 2] + "' does not match manifest slot '" +
                                            schema[i].name + "'");
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cols = split(line, '\t');
        if (cols.size() != header.size())
            throw Error("bad_features", "feature table line " + std::to_string(lineno) + ": wrong column count");
        FeatureVector v;
        v.story_id = cols[0];
        v.label = cols[1] == "1" ? 1 : 0;
        v.values.reserve(schema.size());
        for (size_t i = 0; i < schema.size(); ++i) {
            const auto& c = cols[i + 2];
            if (schema[i].kind == FeatureKind::categorical) {
                v.values.emplace_back(c);
            } else {
                double d = 0.0;
                auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), d);
                if (ec != std::errc() || ptr != c.data() + c.size())
                    throw Error("bad_features", "feature table line " + std::to_string(lineno) + ": bad number '" +
                                                    c + "'");
                v.values.emplace_back(d);
            }
        }
        m.rows.push_back(std::move(v));
    }
    return m;
}

FeatureMatrix load_matrix(const std::filesystem::path& path, const FeatureSchema& schema) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path.string());
    return read_matrix_tsv(in, schema);
}

}  // namespace factrank
