#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "factrank/corpus.hpp"
#include "factrank/features.hpp"
#include "factrank/gbdt.hpp"
#include "factrank/lexicon.hpp"
#include "factrank/model_io.hpp"
#include "factrank/service.hpp"
#include "factrank/synth.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(FACTRANK_FIXTURE_DIR) / name;
}

inline const factrank::LexiconConfig& lexicon() {
    static const factrank::LexiconConfig lex =
        factrank::LexiconConfig::load(std::filesystem::path(FACTRANK_DATA_DIR) / "lexicon.conf");
    return lex;
}

// Fresh scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("factrank-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline factrank::FeatureMatrix synthetic_matrix(const factrank::SyntheticSpec& spec) {
    const auto corpus = factrank::generate_synthetic(spec);
    const auto assembled = factrank::assemble_records(corpus.messages, corpus.labels);
    return factrank::build_matrix(assembled.stories, factrank::CorpusStats::from_records(corpus.messages), lexicon());
}

inline factrank::ShareEvent event(int64_t t, std::string user, std::string group, std::string id = "") {
    return {t, std::move(group), std::move(user), id.empty() ? "m" + std::to_string(t) : std::move(id)};
}

// Demo corpus for the monitor: low-share fakes over a few days, a trained
// model, and one story with an image on disk.
struct Demo {
    factrank::ServiceConfig config;
    uint64_t story_with_image = 0;
};

inline Demo build_demo(const std::filesystem::path& root, size_t stories = 600) {
    namespace fs = std::filesystem;
    factrank::SyntheticSpec spec;
    spec.stories = stories;
    spec.fake_fraction = 0.05;
    spec.fake_share_scale = 0.3;
    spec.days = 4;
    spec.seed = 11;
    const auto synthetic = factrank::generate_synthetic(spec);
    factrank::write_synthetic(synthetic, root / "synthetic");

    factrank::CorpusStore store(root / "corpus");
    store.ingest_file(root / "synthetic/messages.jsonl");
    store.attach_labels_file(root / "synthetic/labels.jsonl");
    store.build_index({});
    const auto assembled = store.assemble_stories();
    const auto matrix = factrank::build_matrix(assembled.stories,
                                               factrank::CorpusStats::from_records(store.records()), lexicon());
    factrank::TrainConfig c;
    c.num_rounds = 60;
    factrank::save_model(factrank::train_model(matrix, c, nullptr, nullptr, 1538352000), root / "model.bin");

    Demo demo;
    demo.story_with_image = assembled.stories.front().story_id;
    const fs::path ref = assembled.stories.front().image_refs.front();
    fs::create_directories(root / "images" / ref.parent_path());
    fs::copy_file(fixture("images/scene.jpg"), root / "images" / ref, fs::copy_options::overwrite_existing);

    demo.config.corpus = root / "corpus";
    demo.config.model = root / "model.bin";
    demo.config.lexicon = fs::path(FACTRANK_DATA_DIR) / "lexicon.conf";
    demo.config.image_dir = root / "images";
    demo.config.tokens = {"secret-token", "second-token"};
    demo.config.port = 0;
    return demo;
}

inline factrank::HttpRequest get(std::string path, std::map<std::string, std::string> query = {},
                                 const std::string& token = "secret-token") {
    factrank::HttpRequest r;
    r.path = std::move(path);
    r.query = std::move(query);
    if (!token.empty()) r.headers["authorization"] = "Bearer " + token;
    return r;
}

inline factrank::HttpRequest post(std::string path, std::string body, const std::string& token = "secret-token") {
    auto r = get(std::move(path), {}, token);
    r.method = "POST";
    r.body = std::move(body);
    return r;
}

}  // namespace testing
