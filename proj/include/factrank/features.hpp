#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "factrank/corpus.hpp"
#include "factrank/lexicon.hpp"

namespace factrank {

enum class FeatureFamily { content, source, environment };

enum class FeatureSet {
    image_properties,
    syntax,
    lexical,
    psycholinguistic,
    semantic,
    subjectivity,
    publisher,
    bias,
    internal_propagation,
    external_propagation,
    temporal,
};

inline constexpr size_t kFeatureSetCount = 11;

enum class FeatureKind { numeric, categorical };

std::string to_string(FeatureFamily f);
std::string to_string(FeatureSet s);
std::string to_string(FeatureKind k);
FeatureSet parse_feature_set(std::string_view s);

struct FeatureSpec {
    std::string name;
    FeatureFamily family;
    FeatureSet set;
    FeatureKind kind;
};

/// Ordered feature catalog. The manifest text (one tab-separated
/// name/family/set/kind line per slot) is the schema contract; its FNV-1a
/// digest is the checksum that models are bound to.
class FeatureSchema {
public:
    FeatureSchema() = default;
    explicit FeatureSchema(std::vector<FeatureSpec> specs);

    // The canonical 181-slot catalog.
    static const FeatureSchema& standard();
    static FeatureSchema parse_manifest(std::string_view text);
    static FeatureSchema load_manifest(const std::filesystem::path& path);

    size_t size() const { return specs_.size(); }
    const FeatureSpec& operator[](size_t i) const { return specs_[i]; }
    const std::vector<FeatureSpec>& specs() const { return specs_; }

    std::optional<size_t> index_of(std::string_view name) const;
    size_t require(std::string_view name) const;
    std::array<size_t, kFeatureSetCount> set_counts() const;

    std::string manifest() const;
    uint64_t checksum() const { return checksum_; }

private:
    std::vector<FeatureSpec> specs_;
    uint64_t checksum_ = 0;
};

using FeatureValue = std::variant<double, std::string>;

struct FeatureVector {
    std::string story_id;
    std::vector<FeatureValue> values;
    int label = 0;  // 1 = fake, 0 = unchecked

    double number(size_t slot) const { return std::get<double>(values[slot]); }
    const std::string& category(size_t slot) const { return std::get<std::string>(values[slot]); }
};

struct FeatureMatrix {
    FeatureSchema schema;
    std::vector<FeatureVector> rows;

    std::vector<int> labels() const;
};

inline constexpr std::array<int64_t, 13> kTemporalWindows = {900,    1800,   2700,   3600,   7200,   14400, 28800,
                                                             57600,  86400,  172800, 259200, 345600, 432000};

// Generic top-level domain suffixes treated as "common" for external links.
inline constexpr std::array<const char*, 7> kCommonSuffixes = {".com", ".net", ".edu", ".org",
                                                               ".mil", ".gov", ".br"};

inline constexpr size_t kContentSlots = 139;
inline constexpr size_t kSourceSlots = 8;
inline constexpr size_t kEnvironmentSlots = 34;

// Slot blocks in schema order. Extraction is total: empty text and missing
// annotations give zeros / "unknown".
std::vector<FeatureValue> extract_content(const ImageStory& story, const LexiconConfig& lexicon);
std::vector<FeatureValue> extract_source(const ImageStory& story, const CorpusStats& corpus,
                                         const LexiconConfig& lexicon);
std::vector<FeatureValue> extract_environment(const ImageStory& story);

FeatureVector extract_features(const ImageStory& story, const CorpusStats& corpus, const LexiconConfig& lexicon);
FeatureMatrix build_matrix(const std::vector<ImageStory>& stories, const CorpusStats& corpus,
                           const LexiconConfig& lexicon);

// Lower-cased host of an http(s) URL, empty when it cannot be parsed.
std::string url_host(std::string_view url);
bool is_common_domain(std::string_view host);

// Feature table TSV: header "story_id  label  <slot names...>", one row per
// story. Reading validates the header against the schema.
void write_matrix_tsv(const FeatureMatrix& m, std::ostream& out);
void save_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_matrix_tsv(std::istream& in, const FeatureSchema& schema = FeatureSchema::standard());
FeatureMatrix load_matrix(const std::filesystem::path& path, const FeatureSchema& schema = FeatureSchema::standard());

}  // namespace factrank
