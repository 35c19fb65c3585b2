#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace factrank {

/// Word list with LIWC-style mechanics: plain entries match whole words,
/// entries ending in '*' match any word with that prefix. Matching is done
/// on lower-cased, accent-folded forms.
class WordList {
public:
    void add(std::string_view entry);
    void merge(const WordList& other);
    bool contains(std::string_view folded_word) const;
    size_t size() const { return exact_.size() + prefixes_.size(); }

private:
    std::unordered_set<std::string> exact_;
    std::vector<std::string> prefixes_;
};

enum class Bias { left, right, mainstream };

std::string to_string(Bias b);
Bias parse_bias(std::string_view s);

inline constexpr std::array<const char*, 38> kPsychCategories = {
    "affect",  "posemo", "negemo",  "anx",         "anger",   "sad",    "social", "family",
    "friend",  "female", "male",    "cogmech",     "insight", "cause",  "discrep", "tentat",
    "certain", "differ", "percept", "see",         "hear",    "feel",   "bio",    "body",
    "health",  "ingest", "drives",  "affiliation", "achieve", "power",  "reward", "risk",
    "time",    "work",   "money",   "relig",       "death",   "swear"};

inline constexpr std::array<const char*, 5> kPronounClasses = {"first_singular", "first_plural", "second",
                                                               "third", "demonstrative"};

/// Every word list the text features consult, plus the group-bias rules.
///
/// File format (UTF-8):
///
///     # comment
///     [section]
///     key = entry, entry, entry*
///         continuation lines are indented
///
/// Sections: syllables (vowels, silent_e), stopwords (words), pronouns (one
/// key per pronoun class), pos (verbs, modals, adjectives, adverbs),
/// sentiment (positive, negative), subjectivity (cues), psycholinguistic
/// (one key per category; "@name" includes another category), bias.keywords
/// (left, right, mainstream; substrings of group names) and bias.overrides
/// (group_id = bias).
struct LexiconConfig {
    std::u32string vowels;
    bool silent_e = false;
    WordList stopwords;
    std::array<WordList, kPronounClasses.size()> pronouns;
    WordList verbs, modals, adjectives, adverbs;
    WordList positive, negative;
    WordList subjectivity_cues;
    std::array<WordList, kPsychCategories.size()> psych;
    std::vector<std::pair<Bias, std::string>> bias_keywords;
    std::unordered_map<std::string, Bias> bias_overrides;

    static LexiconConfig parse(std::string_view text);
    static LexiconConfig load(const std::filesystem::path& path);

    // Override first, then keyword substrings of the (folded) group name.
    // Keywords of more than one side, or none, resolve to mainstream.
    Bias resolve_bias(const std::string& group_id, const std::string& group_name) const;

    // True when the word appears in any list ("Dic").
    bool in_dictionary(std::string_view folded_word) const;
};

}  // namespace factrank
