// factrank: command-line pipeline driver.
//
//   synth -> ingest -> dedup -> extract -> analyze / train / evaluate -> score / rank -> serve

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "factrank/analysis.hpp"
#include "factrank/corpus.hpp"
#include "factrank/features.hpp"
#include "factrank/gbdt.hpp"
#include "factrank/model_io.hpp"
#include "factrank/protocol.hpp"
#include "factrank/ranking.hpp"
#include "factrank/service.hpp"
#include "factrank/synth.hpp"
#include "factrank/util.hpp"

using namespace factrank;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kDefaultLexicon = FACTRANK_DATA_DIR "/lexicon.conf";

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error("bad_config", path.string() + " is not a JSON object");
    return j;
}

TrainConfig train_config_from(const json& j, TrainConfig c) {
    c.max_depth = j.value("max_depth", c.max_depth);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.num_rounds = j.value("num_rounds", c.num_rounds);
    c.min_leaf = j.value("min_leaf", c.min_leaf);
    c.lambda = j.value("lambda", c.lambda);
    c.min_child_weight = j.value("min_child_weight", c.min_child_weight);
    c.patience = j.value("patience", c.patience);
    return c;
}

// {"train": {...}, "grid": [{...}, ...]}; no grid means the depth x rate table.
std::vector<TrainConfig> grid_from(const json& config, uint64_t seed) {
    TrainConfig base;
    if (config.contains("train")) base = train_config_from(config["train"], base);
    base.seed = seed;
    if (!config.contains("grid")) return default_grid(base);
    std::vector<TrainConfig> grid;
    for (const auto& g : config["grid"]) grid.push_back(train_config_from(g, base));
    if (grid.empty()) throw Error("bad_config", "grid is empty");
    return grid;
}

json config_or_empty(const std::string& path) { return path.empty() ? json::object() : read_json_file(path); }

// Writes to `path`, or stdout when it is empty or "-".
template <typename F>
void emit(const std::string& path, F&& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot write " + path);
    write(out);
    if (!out) throw Error("io", "write failed: " + path);
}

MonitorService* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fakeness ranking pipeline for image shares"};
    app.require_subcommand(1);

    std::string corpus, model, out, config, features, lexicon = kDefaultLexicon, strategy = "fakeness";
    uint64_t seed = 1;
    size_t k = 10;

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus (messages.jsonl, labels.jsonl)");
    SyntheticSpec spec;
    std::string strength = "strong";
    synth->add_option("--out", out, "Output directory")->required();
    synth->add_option("--stories", spec.stories, "Number of stories");
    synth->add_option("--fake-fraction", spec.fake_fraction, "Fraction of fake stories");
    synth->add_option("--strength", strength, "Planted signal: strong, medium, weak or none");
    synth->add_option("--fake-share-scale", spec.fake_share_scale, "Multiplier on fake share counts");
    synth->add_option("--days", spec.days, "Days spanned by the corpus");
    synth->add_option("--seed", seed, "Seed");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Append message records (and labels) to a corpus");
    std::vector<std::string> inputs;
    std::string labels_file;
    ingest->add_option("--corpus", corpus, "Corpus directory")->required();
    ingest->add_option("inputs", inputs, "JSONL message files ('-' for stdin)");
    ingest->add_option("--labels", labels_file, "JSONL label verdicts");

    // dedup
    auto* dedup = app.add_subcommand("dedup", "Group records into stories by perceptual hash");
    std::string mode = "exact", image_root;
    int distance = 4;
    dedup->add_option("--corpus", corpus, "Corpus directory")->required();
    dedup->add_option("--mode", mode, "exact or near")->check(CLI::IsMember({"exact", "near"}));
    dedup->add_option("--distance", distance, "Hamming radius for near grouping");
    dedup->add_option("--image-root", image_root, "Directory relative image refs resolve against");

    // manifest
    auto* manifest = app.add_subcommand("manifest", "Write the feature manifest");
    manifest->add_option("--out", out, "Output file (stdout by default)");

    // extract
    auto* extract = app.add_subcommand("extract", "Compute the feature table of every story");
    extract->add_option("--corpus", corpus, "Corpus directory")->required();
    extract->add_option("--lexicon", lexicon, "Lexicon file");
    extract->add_option("--out", out, "Feature TSV (stdout by default)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Rank features by information gain");
    size_t top = 10;
    int bins = 10;
    analyze->add_option("--features", features, "Feature TSV")->required();
    analyze->add_option("--top", top, "Rows to print (0 = all)");
    analyze->add_option("--bins", bins, "Equal-frequency bins for numeric features");
    analyze->add_option("--out", out, "Output TSV (stdout by default)");

    // train
    auto* train = app.add_subcommand("train", "Train the fakeness model with grid search");
    int64_t trained_at = 0;
    train->add_option("--features", features, "Feature TSV")->required();
    train->add_option("--model", model, "Output model file")->required();
    train->add_option("--config", config, "JSON config: train, grid");
    train->add_option("--seed", seed, "Seed for the validation split");
    train->add_option("--trained-at", trained_at, "Unix time stored in the model");

    // score
    auto* score = app.add_subcommand("score", "Fakeness probability of every story");
    score->add_option("--features", features, "Feature TSV")->required();
    score->add_option("--model", model, "Model file")->required();
    score->add_option("--out", out, "Output TSV (stdout by default)");

    // rank
    auto* rank = app.add_subcommand("rank", "Top stories under a ranking strategy");
    rank->add_option("--features", features, "Feature TSV")->required();
    rank->add_option("--model", model, "Model file (fakeness only)");
    rank->add_option("--strategy", strategy, "fakeness, shares, distinct_groups or distinct_users");
    rank->add_option("--k", k, "Rows to print (0 = all)");
    rank->add_option("--out", out, "Output TSV (stdout by default)");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Cross-validated comparison of ranking strategies");
    std::string curves;
    evaluate->add_option("--features", features, "Feature TSV")->required();
    evaluate->add_option("--seed", seed, "Seed")->required();
    evaluate->add_option("--config", config, "JSON config: folds, samples, sample_size, ks, alpha, recall_target, methods, train, grid");
    evaluate->add_option("--out", out, "Report TSV (stdout by default)");
    evaluate->add_option("--curves", curves, "Cost-curve CSV");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the monitor HTTP API");
    ServiceConfig service;
    std::string bind = "127.0.0.1:8080", image_dir;
    std::vector<std::string> tokens;
    size_t page_limit = 500;
    serve->add_option("--corpus", corpus, "Corpus directory")->required();
    serve->add_option("--model", model, "Model file")->required();
    serve->add_option("--lexicon", lexicon, "Lexicon file");
    serve->add_option("--bind", bind, "host:port");
    serve->add_option("--token", tokens, "Access token (repeatable)");
    serve->add_option("--config", config, "JSON config: tokens, page_limit, image_dir");
    serve->add_option("--image-dir", image_dir, "Directory images are served from");
    serve->add_option("--page-limit", page_limit, "Largest k accepted by /api/rank");

    // inspect-model
    auto* inspect = app.add_subcommand("inspect-model", "Dump a model as JSON");
    inspect->add_option("--model", model, "Model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"code", "usage"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }

    try {
        if (*synth) {
            spec.seed = seed;
            spec.strength = SignalStrength::preset(strength);
            const SyntheticCorpus c = generate_synthetic(spec);
            write_synthetic(c, out);
            size_t fakes = 0;
            for (int l : c.story_labels) fakes += l;
            std::cout << json{{"stories", c.story_hashes.size()}, {"fakes", fakes}, {"messages", c.messages.size()}}.dump()
                      << "\n";
        } else if (*ingest) {
            CorpusStore store(corpus);
            json result = json::object();
            IngestSummary total;
            for (const std::string& in : inputs) {
                IngestSummary s = in == "-" ? store.ingest(std::cin) : store.ingest_file(in);
                total.accepted += s.accepted;
                total.duplicates += s.duplicates;
                for (auto& r : s.rejected) total.rejected.push_back(std::move(r));
            }
            result["records"] = total.to_json();
            if (!labels_file.empty()) {
                const LabelSummary s = store.attach_labels_file(labels_file);
                result["labels"] = {{"matched", s.matched}, {"unmatched", s.unmatched}, {"conflicts", s.conflicts}};
            }
            std::cout << result.dump() << "\n";
        } else if (*dedup) {
            CorpusStore store(corpus);
            GroupingOptions options;
            options.mode = mode == "near" ? GroupingMode::near : GroupingMode::exact;
            options.distance = distance;
            options.image_root = image_root;
            const AssemblyResult r = store.build_index(options);
            json excluded = json::array();
            for (const auto& e : r.excluded) excluded.push_back({{"record", e.line}, {"reason", e.reason}});
            std::cout << json{{"records", store.records().size()},
                              {"stories", r.stories.size()},
                              {"excluded", excluded},
                              {"labels", {{"matched", r.labels.matched}, {"unmatched", r.labels.unmatched}}}}
                             .dump()
                      << "\n";
        } else if (*manifest) {
            emit(out, [](std::ostream& o) { o << FeatureSchema::standard().manifest(); });
        } else if (*extract) {
            const CorpusStore store(corpus);
            const LexiconConfig lex = LexiconConfig::load(lexicon);
            const AssemblyResult r = store.assemble_stories();
            const FeatureMatrix m = build_matrix(r.stories, CorpusStats::from_records(store.records()), lex);
            emit(out, [&](std::ostream& o) { write_matrix_tsv(m, o); });
        } else if (*analyze) {
            const FeatureMatrix m = load_matrix(features);
            const auto report = rank_features(m, bins);
            emit(out, [&](std::ostream& o) { write_importance_tsv(report, o, top == 0 ? report.size() : top); });
        } else if (*train) {
            const FeatureMatrix m = load_matrix(features);
            const auto grid = grid_from(config_or_empty(config), seed);
            const auto labels = m.labels();
            const FoldPlan plan = stratified_folds(labels, 5, seed);
            std::vector<FeatureVector> tr, va;
            for (size_t i : plan.portions.back()) va.push_back(m.rows[i]);
            for (size_t f = 0; f + 1 < plan.size(); ++f)
                for (size_t i : plan.portions[f]) tr.push_back(m.rows[i]);
            const SplitData data = SplitData::prepare(m.schema, tr, va);
            GridResult result = grid_search(data, grid, trained_at);
            save_model(result.model, model);
            std::cout << json{{"model", model},
                              {"max_depth", result.best.max_depth},
                              {"learning_rate", result.best.learning_rate},
                              {"validation_ndcg10", result.best_ndcg10},
                              {"trees", result.model.booster.trees.size()},
                              {"train_rows", tr.size()},
                              {"validation_rows", va.size()}}
                             .dump()
                      << "\n";
        } else if (*score) {
            const FeatureMatrix m = load_matrix(features);
            const FakenessModel fm = load_model(model, m.schema);
            const auto p = fm.predict(m);
            emit(out, [&](std::ostream& o) {
                o << "story_id\tlabel\tscore\n";
                for (size_t i = 0; i < m.rows.size(); ++i)
                    o << m.rows[i].story_id << '\t' << m.rows[i].label << '\t' << json(p[i]).dump() << '\n';
            });
        } else if (*rank) {
            const FeatureMatrix m = load_matrix(features);
            const Strategy s = parse_strategy(strategy);
            std::optional<FakenessModel> fm;
            if (!model.empty()) fm = load_model(model, m.schema);
            const RankedList list = rank_stories(m, s, fm ? &*fm : nullptr);
            const size_t n = k == 0 ? list.entries.size() : std::min(k, list.entries.size());
            emit(out, [&](std::ostream& o) {
                o << "rank\tstory_id\tscore\tlabel\n";
                for (size_t i = 0; i < n; ++i) {
                    const RankedEntry& e = list.entries[i];
                    o << i + 1 << '\t' << e.story_id << '\t' << json(e.score).dump() << '\t' << e.label << '\n';
                }
            });
        } else if (*evaluate) {
            const FeatureMatrix m = load_matrix(features);
            const json c = config_or_empty(config);
            ExperimentOptions options;
            options.seed = seed;
            options.folds = c.value("folds", options.folds);
            options.samples = c.value("samples", options.samples);
            options.sample_size = c.value("sample_size", options.sample_size);
            options.alpha = c.value("alpha", options.alpha);
            options.recall_target = c.value("recall_target", options.recall_target);
            if (c.contains("ks")) options.ks = c["ks"].get<std::vector<size_t>>();
            if (c.contains("methods")) {
                options.methods.clear();
                for (const auto& name : c["methods"]) options.methods.push_back(parse_strategy(name.get<std::string>()));
            }
            options.grid = grid_from(c, seed);
            const EvaluationReport report = run_experiment(m, options);
            emit(out, [&](std::ostream& o) { report.write_tsv(o); });
            if (!curves.empty()) emit(curves, [&](std::ostream& o) { report.write_curves_csv(o); });
        } else if (*serve) {
            const json c = config_or_empty(config);
            service.corpus = corpus;
            service.model = model;
            service.lexicon = lexicon;
            const auto colon = bind.rfind(':');
            if (colon == std::string::npos) throw Error("bad_config", "--bind must be host:port");
            service.bind_address = bind.substr(0, colon);
            service.port = std::stoi(bind.substr(colon + 1));
            service.tokens = tokens;
            if (c.contains("tokens"))
                for (const auto& t : c["tokens"]) service.tokens.push_back(t.get<std::string>());
            if (const char* env = std::getenv("FACTRANK_TOKENS"))
                for (auto& t : split(env, ','))
                    if (!t.empty()) service.tokens.push_back(t);
            service.page_limit = c.value("page_limit", page_limit);
            service.image_dir = c.value("image_dir", image_dir);
            MonitorService monitor(service);
            g_service = &monitor;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            const int port = monitor.bind();
            std::cerr << json{{"listening", service.bind_address + ":" + std::to_string(port)}}.dump() << std::endl;
            monitor.listen_after_bind();
            g_service = nullptr;
        } else if (*inspect) {
            const FakenessModel fm = load_model(model);
            std::cout << model_to_json(fm, FeatureSchema::standard()).dump(2) << "\n";
        }
    } catch (const Error& e) {
        std::cerr << json{{"code", e.code()}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"code", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
