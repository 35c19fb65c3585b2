#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "factrank/lexicon.hpp"

namespace factrank {

inline constexpr std::array<const char*, 31> kSyntaxFeatures = {
    "sentence_info_num_sentences",      "sentence_info_words_per_sentence",
    "sentence_info_chars_per_sentence", "sentence_info_syll_per_sentence",
    "sentence_info_syll_per_word",      "sentence_info_chars_per_word",
    "sentence_info_syllables",          "sentence_info_monosyllable_words",
    "sentence_info_polysyllable_words", "sentence_info_complex_words",
    "sentence_info_complex_word_ratio", "sentence_info_long_sentences",
    "sentence_info_short_sentences",    "sentence_info_max_sentence_words",
    "sentence_info_paragraphs",         "readability_flesch_ease",
    "readability_flesch_kincaid",       "readability_coleman_liau",
    "readability_ari",                  "readability_gunning_fog",
    "readability_smog",                 "readability_lix",
    "readability_rix",                  "readability_flesch_ease_per_sentence",
    "readability_flesch_kincaid_per_sentence", "readability_coleman_liau_per_sentence",
    "readability_ari_per_sentence",     "readability_gunning_fog_per_sentence",
    "readability_smog_per_sentence",    "readability_lix_per_sentence",
    "readability_rix_per_sentence"};

inline constexpr std::array<const char*, 49> kLexicalFeatures = {
    "char_count",        "word_count",         "token_count",        "mean_word_length",
    "median_word_length", "max_word_length",   "count_short_word",   "Sixltr",
    "count_low_word",    "count_upper_word",   "count_cap_word",     "upper_char_ratio",
    "digit_count",       "number",             "unique_word_ratio",  "Dic",
    "stopword_count",    "stopword_ratio",     "pron_first_singular", "pron_first_plural",
    "pron_second",       "pron_third",         "pron_demonstrative", "pron_total",
    "verb_count",        "modal_count",        "adj_count",          "adv_count",
    "hashtag_count",     "mention_count",      "url_count",          "email_count",
    "emoji_count",       "punct_period",       "punct_comma",        "punct_colon",
    "punct_semicolon",   "punct_question",     "punct_exclamation",  "Quote",
    "punct_apostrophe",  "punct_parenthesis",  "punct_dash",         "punct_ellipsis",
    "punct_total",       "punct_ratio",        "punct_runs",         "currency_count",
    "percent_count"};

inline constexpr std::array<const char*, 4> kSubjectivityFeatures = {
    "subjectivity_score", "sentiment_polarity", "sentiment_positive_words", "sentiment_negative_words"};

/// Tokenized OCR text. Tokens are whitespace-separated chunks; words are
/// runs of letters (internal hyphens and apostrophes allowed) outside of
/// URL and e-mail tokens; sentences end at . ! ? ... or a line break.
struct TextAnalysis {
    std::u32string text;
    std::vector<std::u32string> tokens;
    std::vector<std::u32string> words;
    std::vector<std::string> folded;  // lower-cased, accent-folded words
    std::vector<int> syllables;       // per word
    std::vector<size_t> sentence_words;
    size_t paragraphs = 0;
};

TextAnalysis analyze_text(std::string_view utf8_text, const LexiconConfig& lexicon);

// Vowel-group count, at least 1 for any word containing a letter.
int count_syllables(std::u32string_view word, const LexiconConfig& lexicon);

std::array<double, 31> syntax_block(const TextAnalysis& t);
std::array<double, 49> lexical_block(const TextAnalysis& t, const LexiconConfig& lexicon);
std::array<double, 38> psych_block(const TextAnalysis& t, const LexiconConfig& lexicon);
std::array<double, 4> subjectivity_block(const TextAnalysis& t, const LexiconConfig& lexicon);

}  // namespace factrank
