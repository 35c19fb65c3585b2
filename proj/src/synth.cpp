#include "factrank/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>

#include "factrank/util.hpp"

namespace factrank {

SignalStrength SignalStrength::preset(std::string_view name) {
    if (name == "strong") return {0.3, 0.5, 1.0};
    if (name == "medium") return {0.2, 0.3, 0.6};
    if (name == "weak") return {0.1, 0.15, 0.3};
    if (name == "none") return {0.0, 0.0, 0.0};
    throw Error("bad_strength", "unknown signal strength '" + std::string(name) +
                                    "' (expected strong, medium, weak or none)");
}

namespace {

constexpr std::array<const char*, 40> kPlainWords = {
    "hoje",    "cidade",  "prefeitura", "escola", "reuniao", "bairro",    "familia", "amigos",   "jogo",
    "time",    "domingo", "festa",      "chuva",  "praia",   "trabalho",  "governo", "projeto",  "saude",
    "vacina",  "hospital", "votacao",   "debate", "eleicao", "candidato", "proposta", "economia", "empregos",
    "mercado", "noticia", "evento",     "campanha", "igreja", "comunidade", "horario", "local",   "convite",
    "programa", "entrevista", "dados",  "pesquisa"};

constexpr std::array<const char*, 24> kLoudWords = {
    "urgente",   "absurdo",    "vergonha", "mentira",   "fraude",    "golpe",    "bandido", "corrupto",
    "compartilhem", "divulguem", "escandalo", "verdade", "censura",  "chocante", "revoltante", "odio",
    "ladrao",    "comunista",  "medo",     "perigo",    "alerta",    "ameaca",   "crime",   "morte"};

constexpr std::array<const char*, 20> kTags = {
    "text",  "font",   "poster", "people", "crowd",     "person",  "smile",  "flag",   "screenshot", "meme",
    "event", "banner", "photo",  "face",   "newspaper", "brazil",  "street", "speech", "chart",      "document"};

constexpr std::array<const char*, 16> kEntities = {
    "Jair Bolsonaro", "Lula",           "Fernando Haddad", "Brasil",  "Eleicao", "Urna eletronica",
    "Supremo",        "Congresso",      "Partido",         "Noticia", "Debate",  "Pesquisa eleitoral",
    "Governo",        "Fake news",      "Ciro Gomes",      "Marina Silva"};

constexpr std::array<const char*, 10> kCommonDomains = {
    "g1.globo.com",   "folha.uol.com.br", "youtube.com",    "facebook.com",  "twitter.com",
    "wikipedia.org",  "estadao.com.br",   "uol.com.br",     "bbc.com",       "terra.com.br"};

constexpr std::array<const char*, 8> kUncommonSuffixes = {".xyz", ".info", ".site", ".online",
                                                          ".news", ".blog", ".io",   ".pt"};

constexpr std::array<const char*, 3> kRightNames = {"# BOLSONARO PRESIDENTE", "Direita Unida", "Patriotas do Brasil"};
constexpr std::array<const char*, 3> kLeftNames = {"Lula Livre", "Haddad Presidente", "Esquerda Unida"};
constexpr std::array<const char*, 3> kPlainNames = {"Noticias da Cidade", "Familia Reunida", "Amigos do Futebol"};

template <typename T, size_t N>
const char* pick(Rng& rng, const std::array<T, N>& pool) {
    return pool[rng.below(N)];
}

bool chance(Rng& rng, double p) { return rng.uniform() < p; }

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

std::string id(char prefix, size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%06zu", prefix, n);
    return buf;
}

std::string make_text(Rng& rng, bool fake, double c) {
    if (chance(rng, 0.1)) return {};
    std::string text;
    const size_t sentences = 1 + rng.below(4);
    const double loud = fake ? 0.08 + 0.4 * c : 0.08;
    for (size_t s = 0; s < sentences; ++s) {
        const size_t words = 3 + rng.below(10);
        for (size_t w = 0; w < words; ++w) {
            std::string word = chance(rng, loud) ? pick(rng, kLoudWords) : pick(rng, kPlainWords);
            if (chance(rng, fake ? 0.03 + 0.3 * c : 0.03))
                for (char& ch : word) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            else if (w == 0)
                word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
            if (w) text += ' ';
            text += word;
        }
        const size_t bangs = chance(rng, fake ? 0.2 + 0.5 * c : 0.2) ? 1 + rng.below(3) : 0;
        text += bangs ? std::string(bangs, '!') : std::string(".");
        if (s + 1 < sentences) text += ' ';
    }
    return text;
}

std::vector<ScoredTag> make_tags(Rng& rng, size_t count, auto const& pool) {
    std::vector<ScoredTag> out;
    std::set<std::string> seen;
    for (size_t i = 0; i < count; ++i) {
        std::string tag = pick(rng, pool);
        if (!seen.insert(tag).second) continue;
        out.push_back({tag, std::round((0.5 + 0.5 * rng.uniform()) * 1000.0) / 1000.0});
    }
    return out;
}

double score(Rng& rng, double base, double shift) { return std::round(clamp01(base * rng.uniform() + shift * rng.uniform()) * 1000.0) / 1000.0; }

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
    if (spec.stories == 0) throw Error("bad_spec", "story count must be positive");
    if (!(spec.fake_fraction > 0.0 && spec.fake_fraction < 1.0))
        throw Error("bad_spec", "fake fraction must lie in (0,1)");
    if (spec.days < 1) throw Error("bad_spec", "days must be positive");

    Rng rng(spec.seed);
    const size_t n = spec.stories;
    const size_t n_fake = std::clamp<size_t>(static_cast<size_t>(std::floor(n * spec.fake_fraction + 0.5)), 1,
                                             std::max<size_t>(n, 2) - 1);
    std::vector<int> labels(n, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<long>(n_fake), 1);
    rng.shuffle(labels);

    const size_t n_users = std::max<size_t>(30, static_cast<size_t>(std::ceil(3.8 * static_cast<double>(n))));
    const size_t n_origin = std::max<size_t>(20, n / 10);
    const size_t n_spreaders = 10;
    const size_t n_groups = std::max<size_t>(6, n / 11);
    std::vector<std::string> group_names(n_groups);
    for (size_t g = 0; g < n_groups; ++g) {
        const char* base = g % 3 == 0 ? kRightNames[(g / 3) % 3] : g % 3 == 1 ? kLeftNames[(g / 3) % 3]
                                                                               : kPlainNames[(g / 3) % 3];
        group_names[g] = std::string(base) + " " + std::to_string(g / 9 + 1);
    }
    const size_t n_right = (n_groups + 2) / 3;

    const auto& st = spec.strength;
    const double e = st.environment, s = st.source, c = st.content;
    const double span = static_cast<double>(spec.days) * 86400.0;

    SyntheticCorpus out;
    out.story_labels = labels;
    std::set<uint64_t> used;
    for (size_t k = 0; k < n; ++k) {
        const bool fake = labels[k] != 0;
        uint64_t hash;
        do hash = rng.next();
        while (hash == 0 || !used.insert(hash).second);
        out.story_hashes.push_back(hash);
        const std::string hex = to_hex64(hash);

        // Shares: same heavy-tailed law for both classes.
        double shares = 1.0 + std::floor(std::exp(1.2 + 1.0 * rng.normal()));
        if (fake) shares = std::max(1.0, std::round(shares * spec.fake_share_scale));
        const size_t n_shares = static_cast<size_t>(std::min(shares, 400.0));

        const int64_t t0 = spec.start_epoch + static_cast<int64_t>(rng.uniform() * span);
        const double tau = 8.0 * 3600.0 * (fake ? 1.0 - 0.85 * e : 1.0);

        const size_t first_group = fake && chance(rng, 0.6 * s) ? 3 * rng.below(n_right) : rng.below(n_groups);
        const size_t originator = fake && chance(rng, 0.6 * s) ? rng.below(n_spreaders) : rng.below(n_origin);

        AnnotationBundle a;
        a.face_count = static_cast<int>(rng.poisson(0.8));
        a.labels = make_tags(rng, 1 + rng.below(5), kTags);
        a.objects = make_tags(rng, rng.below(3), kTags);
        for (size_t i = 0, m = 1 + rng.below(4); i < m; ++i)
            a.dominant_colors.push_back({static_cast<uint8_t>(rng.below(256)), static_cast<uint8_t>(rng.below(256)),
                                         static_cast<uint8_t>(rng.below(256)),
                                         std::round(rng.uniform() * 1000.0) / 1000.0});
        a.safe_search = SafeSearch{score(rng, 0.2, 0.0), score(rng, 0.3, fake ? 0.3 * c : 0.0),
                                   score(rng, 0.1, 0.0), score(rng, 0.2, fake ? 0.2 * c : 0.0),
                                   score(rng, 0.2, 0.0)};
        a.toxicity = score(rng, 0.4, fake ? 0.4 * c : 0.0);
        a.web_entities = make_tags(rng, rng.below(5), kEntities);
        if (chance(rng, 0.7)) a.best_guess_label = utf8::lower(pick(rng, kEntities));

        const uint64_t n_urls = rng.poisson(fake ? 1.5 + 8.0 * e : 1.5);
        const double p_uncommon = fake ? 0.15 + 0.55 * e : 0.15;
        const double p_secure = fake ? 0.85 - 0.5 * e : 0.85;
        const double p_unreachable = fake ? 0.1 + 0.5 * e : 0.1;
        for (uint64_t u = 0; u < n_urls; ++u) {
            std::string domain = chance(rng, p_uncommon)
                                     ? "site" + std::to_string(rng.below(300)) + pick(rng, kUncommonSuffixes)
                                     : pick(rng, kCommonDomains);
            std::string url = std::string(chance(rng, p_secure) ? "https://" : "http://") + domain + "/p/" +
                              std::to_string(rng.below(100000));
            if (std::find(a.web_matches.begin(), a.web_matches.end(), url) != a.web_matches.end()) continue;
            if (chance(rng, p_unreachable)) a.web_unreachable.push_back(url);
            a.web_matches.push_back(std::move(url));
        }

        const std::string text = make_text(rng, fake, c);
        double offset = 0.0;
        for (size_t j = 0; j < n_shares; ++j) {
            if (j) offset += rng.exponential(tau);
            MessageRecord r;
            r.message_id = "m" + hex + "-" + std::to_string(j);
            r.timestamp = t0 + static_cast<int64_t>(offset);
            const size_t g = j == 0 ? first_group : rng.below(n_groups);
            r.group_id = id('g', g);
            r.group_name = group_names[g];
            r.user_id = j == 0 ? id('u', originator) : id('u', rng.below(n_users));
            r.image_ref = "img/" + hex + ".jpg";
            r.phash = hash;
            r.ocr_text = text;
            if (j == 0) r.annotations = a;
            out.messages.push_back(std::move(r));
        }

        if (fake) {
            LabelVerdict v;
            v.phash = hash;
            v.verdict = Verdict::fake;
            v.source_url = "https://checagem.example.org/" + hex;
            v.checked_at = t0 + 2 * 86400;
            out.labels.push_back(std::move(v));
        }
    }
    std::stable_sort(out.messages.begin(), out.messages.end(), [](const MessageRecord& x, const MessageRecord& y) {
        return x.timestamp < y.timestamp;
    });
    return out;
}

void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream msgs(dir / "messages.jsonl", std::ios::trunc);
    std::ofstream labs(dir / "labels.jsonl", std::ios::trunc);
    if (!msgs || !labs) throw Error("io", "cannot write synthetic corpus to " + dir.string());
    for (const auto& m : corpus.messages) msgs << record_to_json(m).dump() << '\n';
    for (const auto& l : corpus.labels) labs << verdict_to_json(l).dump() << '\n';
}

}  // namespace factrank
