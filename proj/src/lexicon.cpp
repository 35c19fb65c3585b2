#include "factrank/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "factrank/util.hpp"

namespace factrank {

void WordList::add(std::string_view entry) {
    std::string e = utf8::folded(trim(entry));
    if (e.empty()) return;
    if (e.back() == '*') {
        e.pop_back();
        if (!e.empty()) prefixes_.push_back(std::move(e));
    } else {
        exact_.insert(std::move(e));
    }
}

void WordList::merge(const WordList& other) {
    exact_.insert(other.exact_.begin(), other.exact_.end());
    prefixes_.insert(prefixes_.end(), other.prefixes_.begin(), other.prefixes_.end());
}

bool WordList::contains(std::string_view w) const {
    if (exact_.contains(std::string(w))) return true;
    for (const auto& p : prefixes_)
        if (w.size() >= p.size() && w.compare(0, p.size(), p) == 0) return true;
    return false;
}

std::string to_string(Bias b) {
    switch (b) {
        case Bias::left: return "left";
        case Bias::right: return "right";
        default: return "mainstream";
    }
}

Bias parse_bias(std::string_view s) {
    if (s == "left") return Bias::left;
    if (s == "right") return Bias::right;
    if (s == "mainstream") return Bias::mainstream;
    throw Error("bad_config", "bias must be left, right or mainstream, got '" + std::string(s) + "'");
}

namespace {

using Entries = std::vector<std::string>;
using Section = std::map<std::string, Entries>;

std::map<std::string, Section> parse_sections(std::string_view text) {
    std::map<std::string, Section> sections;
    std::string current;
    Entries* last = nullptr;
    size_t lineno = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++lineno;
        if (const auto hash = raw.find('#'); hash != std::string::npos) {
            // '#' starts a comment only at line start or after whitespace.
            if (hash == 0 || raw[hash - 1] == ' ' || raw[hash - 1] == '\t') raw.erase(hash);
        }
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const bool indented = raw[0] == ' ' || raw[0] == '\t';
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error("bad_config", "line " + std::to_string(lineno) + ": unterminated section header");
            current = trim(std::string_view(line).substr(1, line.size() - 2));
            sections[current];
            last = nullptr;
            continue;
        }
        std::string_view values;
        if (indented && last) {
            values = line;
        } else {
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw Error("bad_config", "line " + std::to_string(lineno) + ": expected key = values");
            if (current.empty())
                throw Error("bad_config", "line " + std::to_string(lineno) + ": key outside of a section");
            const std::string key = trim(std::string_view(line).substr(0, eq));
            last = &sections[current][key];
            values = std::string_view(line).substr(eq + 1);
        }
        for (const auto& item : split(values, ',')) {
            auto t = trim(item);
            if (!t.empty()) last->push_back(std::move(t));
        }
    }
    return sections;
}

WordList to_list(const Section& sec, const char* key) {
    WordList wl;
    if (auto it = sec.find(key); it != sec.end())
        for (const auto& e : it->second) wl.add(e);
    return wl;
}

const Section& section(const std::map<std::string, Section>& all, const char* name) {
    static const Section empty;
    auto it = all.find(name);
    return it == all.end() ? empty : it->second;
}

}  // namespace

LexiconConfig LexiconConfig::parse(std::string_view text) {
    const auto all = parse_sections(text);
    LexiconConfig cfg;

    const auto& syl = section(all, "syllables");
    std::string vowels = "aeiouy";
    if (auto it = syl.find("vowels"); it != syl.end() && !it->second.empty()) {
        vowels.clear();
        for (const auto& v : it->second) vowels += v;
    }
    for (char32_t c : utf8::decode(utf8::lower(vowels))) cfg.vowels.push_back(c);
    if (auto it = syl.find("silent_e"); it != syl.end() && !it->second.empty())
        cfg.silent_e = it->second.front() == "true";

    cfg.stopwords = to_list(section(all, "stopwords"), "words");
    const auto& pron = section(all, "pronouns");
    for (size_t i = 0; i < kPronounClasses.size(); ++i) cfg.pronouns[i] = to_list(pron, kPronounClasses[i]);
    const auto& pos = section(all, "pos");
    cfg.verbs = to_list(pos, "verbs");
    cfg.modals = to_list(pos, "modals");
    cfg.adjectives = to_list(pos, "adjectives");
    cfg.adverbs = to_list(pos, "adverbs");
    const auto& sent = section(all, "sentiment");
    cfg.positive = to_list(sent, "positive");
    cfg.negative = to_list(sent, "negative");
    cfg.subjectivity_cues = to_list(section(all, "subjectivity"), "cues");

    // Psycholinguistic categories, with "@category" includes resolved
    // recursively.
    const auto& psych = section(all, "psycholinguistic");
    for (const char* name : kPsychCategories)
        if (!psych.contains(name)) throw Error("bad_config", std::string("missing psycholinguistic category ") + name);
    for (const auto& [name, _] : psych)
        if (std::find_if(kPsychCategories.begin(), kPsychCategories.end(),
                         [&](const char* c) { return name == c; }) == kPsychCategories.end())
            throw Error("bad_config", "unknown psycholinguistic category " + name);

    std::map<std::string, WordList> resolved;
    std::vector<std::string> stack;
    auto resolve = [&](auto&& self, const std::string& name) -> const WordList& {
        if (auto it = resolved.find(name); it != resolved.end()) return it->second;
        if (std::find(stack.begin(), stack.end(), name) != stack.end())
            throw Error("bad_config", "cyclic include of category " + name);
        auto pit = psych.find(name);
        if (pit == psych.end()) throw Error("bad_config", "include of unknown category " + name);
        stack.push_back(name);
        WordList wl;
        for (const auto& e : pit->second) {
            if (!e.empty() && e[0] == '@') wl.merge(self(self, e.substr(1)));
            else wl.add(e);
        }
        stack.pop_back();
        return resolved.emplace(name, std::move(wl)).first->second;
    };
    for (size_t i = 0; i < kPsychCategories.size(); ++i) cfg.psych[i] = resolve(resolve, kPsychCategories[i]);

    for (const auto& [side, words] : section(all, "bias.keywords")) {
        const Bias b = parse_bias(side);
        for (const auto& w : words) cfg.bias_keywords.emplace_back(b, utf8::folded(w));
    }
    for (const auto& [group, values] : section(all, "bias.overrides")) {
        if (values.size() != 1) throw Error("bad_config", "bias override for " + group + " needs one value");
        cfg.bias_overrides[group] = parse_bias(values.front());
    }
    return cfg;
}

LexiconConfig LexiconConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open lexicon config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

Bias LexiconConfig::resolve_bias(const std::string& group_id, const std::string& group_name) const {
    if (auto it = bias_overrides.find(group_id); it != bias_overrides.end()) return it->second;
    const std::string name = utf8::folded(group_name);
    bool left = false, right = false;
    for (const auto& [side, kw] : bias_keywords) {
        if (kw.empty() || name.find(kw) == std::string::npos) continue;
        if (side == Bias::left) left = true;
        else if (side == Bias::right) right = true;
    }
    if (left && !right) return Bias::left;
    if (right && !left) return Bias::right;
    return Bias::mainstream;
}

bool LexiconConfig::in_dictionary(std::string_view w) const {
    if (stopwords.contains(w) || verbs.contains(w) || modals.contains(w) || adjectives.contains(w) ||
        adverbs.contains(w) || positive.contains(w) || negative.contains(w) || subjectivity_cues.contains(w))
        return true;
    for (const auto& p : pronouns)
        if (p.contains(w)) return true;
    for (const auto& p : psych)
        if (p.contains(w)) return true;
    return false;
}

}  // namespace factrank
