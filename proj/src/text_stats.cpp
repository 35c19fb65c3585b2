#include "factrank/text_stats.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "factrank/util.hpp"

namespace factrank {

namespace {

bool is_url_token(std::u32string_view t) {
    const std::string s = utf8::encode(t);
    return starts_with_ci(s, "http://") || starts_with_ci(s, "https://") || starts_with_ci(s, "www.");
}

bool is_email_token(std::u32string_view t) {
    const auto at = t.find(U'@');
    if (at == std::u32string_view::npos || at == 0) return false;
    const auto dot = t.find(U'.', at);
    return dot != std::u32string_view::npos && dot > at + 1 && dot + 1 < t.size();
}

bool is_quote(char32_t c) { return c == U'"' || c == U'“' || c == U'”' || c == U'«' || c == U'»' || c == U'„'; }
bool is_apostrophe(char32_t c) { return c == U'\'' || c == U'’' || c == U'‘' || c == U'`'; }
bool is_dash(char32_t c) { return c == U'-' || c == U'–' || c == U'—'; }
bool is_currency(char32_t c) { return c == U'$' || c == U'€' || c == U'£' || c == U'¥' || c == U'¢'; }

bool is_punct(char32_t c) {
    if (c < 0x80) {
        const bool ascii_punct = (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
                                 (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
        // Symbols with their own counters are not punctuation.
        return ascii_punct && c != U'#' && c != U'@' && c != U'$' && c != U'%';
    }
    return is_quote(c) || is_apostrophe(c) || is_dash(c) || c == U'…' || c == U'¡' || c == U'¿';
}

bool is_sentence_end(char32_t c) { return c == U'.' || c == U'!' || c == U'?' || c == U'…' || c == U'\n'; }

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

size_t word_letters(std::u32string_view w) {
    return static_cast<size_t>(std::count_if(w.begin(), w.end(), utf8::is_letter));
}

}  // namespace

int count_syllables(std::u32string_view word, const LexiconConfig& lexicon) {
    int groups = 0;
    bool in_vowel = false;
    bool any_letter = false;
    for (char32_t c : word) {
        if (!utf8::is_letter(c)) {
            in_vowel = false;
            continue;
        }
        any_letter = true;
        const bool vowel = lexicon.vowels.find(utf8::to_lower(c)) != std::u32string::npos;
        if (vowel && !in_vowel) ++groups;
        in_vowel = vowel;
    }
    if (lexicon.silent_e && groups > 1 && !word.empty() && utf8::to_lower(word.back()) == U'e') --groups;
    if (any_letter && groups == 0) groups = 1;
    return groups;
}

TextAnalysis analyze_text(std::string_view utf8_text, const LexiconConfig& lexicon) {
    TextAnalysis t;
    t.text = utf8::decode(utf8_text);
    const auto& s = t.text;

    // Whitespace tokens, remembering which spans are URLs / e-mails.
    std::vector<std::pair<size_t, size_t>> skip;
    for (size_t i = 0; i < s.size();) {
        while (i < s.size() && utf8::is_space(s[i])) ++i;
        size_t j = i;
        while (j < s.size() && !utf8::is_space(s[j])) ++j;
        if (j > i) {
            t.tokens.emplace_back(s.substr(i, j - i));
            if (is_url_token(t.tokens.back()) || is_email_token(t.tokens.back())) skip.emplace_back(i, j);
        }
        i = j;
    }

    size_t skip_idx = 0;
    size_t current_sentence = 0;
    bool sentence_open = false;
    for (size_t i = 0; i < s.size();) {
        while (skip_idx < skip.size() && skip[skip_idx].second <= i) ++skip_idx;
        if (skip_idx < skip.size() && skip[skip_idx].first <= i) {
            i = skip[skip_idx].second;
            continue;
        }
        const char32_t c = s[i];
        if (utf8::is_letter(c)) {
            size_t j = i + 1;
            while (j < s.size()) {
                if (utf8::is_letter(s[j])) {
                    ++j;
                } else if ((s[j] == U'-' || is_apostrophe(s[j])) && j + 1 < s.size() && utf8::is_letter(s[j + 1])) {
                    j += 2;
                } else {
                    break;
                }
            }
            t.words.emplace_back(s.substr(i, j - i));
            t.folded.push_back(utf8::folded(utf8::encode(t.words.back())));
            t.syllables.push_back(count_syllables(t.words.back(), lexicon));
            if (!sentence_open) {
                t.sentence_words.push_back(0);
                current_sentence = t.sentence_words.size() - 1;
                sentence_open = true;
            }
            ++t.sentence_words[current_sentence];
            i = j;
            continue;
        }
        if (is_sentence_end(c)) {
            // A '.' between digits is a decimal separator.
            const bool decimal = c == U'.' && i > 0 && i + 1 < s.size() && utf8::is_digit(s[i - 1]) &&
                                 utf8::is_digit(s[i + 1]);
            if (!decimal) sentence_open = false;
        }
        ++i;
    }

    bool in_paragraph = false;
    size_t line_start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == U'\n') {
            bool blank = true;
            for (size_t k = line_start; k < i; ++k)
                if (!utf8::is_space(s[k])) blank = false;
            if (!blank && !in_paragraph) ++t.paragraphs;
            in_paragraph = !blank;
            line_start = i + 1;
        }
    }
    return t;
}

std::array<double, 31> syntax_block(const TextAnalysis& t) {
    std::array<double, 31> out{};
    const double sentences = static_cast<double>(t.sentence_words.size());
    const double words = static_cast<double>(t.words.size());
    if (words == 0.0 || sentences == 0.0) return out;

    double letters = 0, syllables = 0, mono = 0, poly = 0, complex = 0, long_words = 0;
    for (size_t i = 0; i < t.words.size(); ++i) {
        const auto& w = t.words[i];
        const size_t n = word_letters(w);
        letters += static_cast<double>(n);
        syllables += t.syllables[i];
        if (t.syllables[i] == 1) ++mono;
        if (t.syllables[i] >= 3) {
            ++poly;
            const bool proper = utf8::is_upper(w.front());
            const bool hyphenated = w.find(U'-') != std::u32string::npos;
            if (!proper && !hyphenated) ++complex;
        }
        if (n > 6) ++long_words;
    }
    double long_sentences = 0, short_sentences = 0, max_sentence = 0;
    for (size_t n : t.sentence_words) {
        if (n > 20) ++long_sentences;
        if (n < 8) ++short_sentences;
        max_sentence = std::max(max_sentence, static_cast<double>(n));
    }

    const double wps = words / sentences;
    const double spw = syllables / words;
    const double cpw = letters / words;
    const double flesch = 206.835 - 1.015 * wps - 84.6 * spw;
    const double fk = 0.39 * wps + 11.8 * spw - 15.59;
    const double coleman = 0.0588 * (100.0 * cpw) - 0.296 * (100.0 * sentences / words) - 15.8;
    const double ari = 4.71 * cpw + 0.5 * wps - 21.43;
    const double fog = 0.4 * (wps + 100.0 * complex / words);
    const double smog = 1.0430 * std::sqrt(poly * 30.0 / sentences) + 3.1291;
    const double lix = wps + 100.0 * long_words / words;
    const double rix = long_words / sentences;

    out = {sentences,
           wps,
           letters / sentences,
           syllables / sentences,
           spw,
           cpw,
           syllables,
           mono,
           poly,
           complex,
           complex / words,
           long_sentences,
           short_sentences,
           max_sentence,
           static_cast<double>(t.paragraphs),
           flesch,
           fk,
           coleman,
           ari,
           fog,
           smog,
           lix,
           rix,
           flesch / sentences,
           fk / sentences,
           coleman / sentences,
           ari / sentences,
           fog / sentences,
           smog / sentences,
           lix / sentences,
           rix / sentences};
    return out;
}

std::array<double, 49> lexical_block(const TextAnalysis& t, const LexiconConfig& lex) {
    std::array<double, 49> out{};
    const auto& s = t.text;
    const double chars = static_cast<double>(s.size());
    const double words = static_cast<double>(t.words.size());

    std::vector<double> lengths;
    lengths.reserve(t.words.size());
    double short_w = 0, sixltr = 0, low = 0, upper = 0, cap = 0;
    for (const auto& w : t.words) {
        const size_t n = word_letters(w);
        lengths.push_back(static_cast<double>(n));
        if (n < 4) ++short_w;
        if (n > 6) ++sixltr;
        size_t up = 0, lo = 0;
        for (char32_t c : w) {
            if (utf8::is_upper(c)) ++up;
            else if (utf8::is_lower(c)) ++lo;
        }
        if (up == 0) ++low;
        else if (lo == 0 && up >= 2) ++upper;
        else if (utf8::is_upper(w.front()) && up == 1) ++cap;
    }
    double mean_len = 0, median_len = 0, max_len = 0;
    if (!lengths.empty()) {
        for (double l : lengths) mean_len += l;
        mean_len /= words;
        std::vector<double> sorted = lengths;
        std::sort(sorted.begin(), sorted.end());
        const size_t m = sorted.size() / 2;
        median_len = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
        max_len = sorted.back();
    }

    double letters = 0, upper_chars = 0, digits = 0, emoji = 0, currency = 0, percent = 0;
    for (char32_t c : s) {
        if (utf8::is_letter(c)) {
            ++letters;
            if (utf8::is_upper(c)) ++upper_chars;
        }
        if (utf8::is_digit(c)) ++digits;
        if (utf8::is_emoji(c)) ++emoji;
        if (is_currency(c)) ++currency;
        if (c == U'%') ++percent;
    }

    double numerals = 0;
    for (size_t i = 0; i < s.size();) {
        if (utf8::is_digit(s[i])) {
            ++numerals;
            while (i < s.size() && (utf8::is_digit(s[i]) || ((s[i] == U'.' || s[i] == U',') && i + 1 < s.size() &&
                                                             utf8::is_digit(s[i + 1]))))
                ++i;
        } else {
            ++i;
        }
    }

    std::unordered_set<std::string> distinct(t.folded.begin(), t.folded.end());
    double dic = 0, stop = 0, verbs = 0, modals = 0, adjs = 0, advs = 0;
    std::array<double, kPronounClasses.size()> pron{};
    for (const auto& w : t.folded) {
        if (lex.in_dictionary(w)) ++dic;
        if (lex.stopwords.contains(w)) ++stop;
        if (lex.verbs.contains(w)) ++verbs;
        if (lex.modals.contains(w)) ++modals;
        if (lex.adjectives.contains(w)) ++adjs;
        if (lex.adverbs.contains(w)) ++advs;
        for (size_t k = 0; k < pron.size(); ++k)
            if (lex.pronouns[k].contains(w)) ++pron[k];
    }
    double pron_total = 0;
    for (double p : pron) pron_total += p;

    double hashtags = 0, mentions = 0, urls = 0, emails = 0;
    for (const auto& tok : t.tokens) {
        if (is_url_token(tok)) ++urls;
        else if (is_email_token(tok)) ++emails;
        else if (tok.size() > 1 && tok[0] == U'#' && (utf8::is_letter(tok[1]) || utf8::is_digit(tok[1]))) ++hashtags;
        else if (tok.size() > 1 && tok[0] == U'@' && (utf8::is_letter(tok[1]) || utf8::is_digit(tok[1]))) ++mentions;
    }

    double period = 0, comma = 0, colon = 0, semicolon = 0, question = 0, exclam = 0, quote = 0, apos = 0,
           paren = 0, dash = 0, ellipsis = 0, punct_total = 0, runs = 0;
    size_t run = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        const char32_t c = s[i];
        if (c == U'.') {
            size_t j = i;
            while (j < s.size() && s[j] == U'.') ++j;
            if (j - i >= 3) ++ellipsis;
            else period += static_cast<double>(j - i);
            punct_total += static_cast<double>(j - i);
            run += j - i;
            i = j - 1;
            continue;
        }
        if (is_punct(c)) {
            ++punct_total;
            ++run;
            if (c == U',') ++comma;
            else if (c == U':') ++colon;
            else if (c == U';') ++semicolon;
            else if (c == U'?') ++question;
            else if (c == U'!') ++exclam;
            else if (is_quote(c)) ++quote;
            else if (is_apostrophe(c)) ++apos;
            else if (c == U'(' || c == U')' || c == U'[' || c == U']' || c == U'{' || c == U'}') ++paren;
            else if (is_dash(c)) ++dash;
            else if (c == U'…') ++ellipsis;
        } else {
            if (run >= 2) ++runs;
            run = 0;
        }
    }
    if (run >= 2) ++runs;

    out = {chars,
           words,
           static_cast<double>(t.tokens.size()),
           mean_len,
           median_len,
           max_len,
           short_w,
           sixltr,
           low,
           upper,
           cap,
           safe_div(upper_chars, letters),
           digits,
           numerals,
           safe_div(static_cast<double>(distinct.size()), words),
           safe_div(dic, words),
           stop,
           safe_div(stop, words),
           pron[0],
           pron[1],
           pron[2],
           pron[3],
           pron[4],
           pron_total,
           verbs,
           modals,
           adjs,
           advs,
           hashtags,
           mentions,
           urls,
           emails,
           emoji,
           period,
           comma,
           colon,
           semicolon,
           question,
           exclam,
           quote,
           apos,
           paren,
           dash,
           ellipsis,
           punct_total,
           safe_div(punct_total, chars),
           runs,
           currency,
           percent};
    return out;
}

std::array<double, 38> psych_block(const TextAnalysis& t, const LexiconConfig& lex) {
    std::array<double, 38> out{};
    for (const auto& w : t.folded)
        for (size_t k = 0; k < out.size(); ++k)
            if (lex.psych[k].contains(w)) ++out[k];
    return out;
}

std::array<double, 4> subjectivity_block(const TextAnalysis& t, const LexiconConfig& lex) {
    double cues = 0, pos = 0, neg = 0;
    for (const auto& w : t.folded) {
        if (lex.subjectivity_cues.contains(w)) ++cues;
        if (lex.positive.contains(w)) ++pos;
        if (lex.negative.contains(w)) ++neg;
    }
    const double words = static_cast<double>(t.folded.size());
    return {safe_div(cues, words), safe_div(pos - neg, pos + neg), pos, neg};
}

}  // namespace factrank
