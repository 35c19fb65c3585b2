#include "factrank/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "factrank/util.hpp"

namespace factrank {

namespace {

constexpr char kMagic[4] = {'F', 'K', 'R', 'S'};

class Writer {
public:
    template <typename T>
    void put(T v) {
        static_assert(std::is_integral_v<T>);
        using U = std::make_unsigned_t<T>;
        U u = static_cast<U>(v);
        for (size_t i = 0; i < sizeof(T); ++i) {
            out_.push_back(static_cast<char>(u & 0xff));
            u = static_cast<U>(u >> 8);
        }
    }
    void put_f64(double v) { put(std::bit_cast<uint64_t>(v)); }
    void put_str(std::string_view s) {
        put(static_cast<uint32_t>(s.size()));
        out_.append(s);
    }
    void raw(const char* p, size_t n) { out_.append(p, n); }
    std::string& bytes() { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        using U = std::make_unsigned_t<T>;
        U u = 0;
        for (size_t i = 0; i < sizeof(T); ++i)
            u = static_cast<U>(u | static_cast<U>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i));
        pos_ += sizeof(T);
        return static_cast<T>(u);
    }
    double get_f64() { return std::bit_cast<double>(get<uint64_t>()); }
    std::string get_str() {
        const auto n = get<uint32_t>();
        need(n);
        std::string s(in_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    size_t count(size_t max) {
        const auto n = get<uint32_t>();
        if (n > max) throw Error("truncated", "model file is damaged (implausible count)");
        return n;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(size_t n) const {
        if (in_.size() - pos_ < n) throw Error("truncated", "model file is truncated");
    }

    std::string_view in_;
    size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const FakenessModel& m) {
    Writer w;
    w.raw(kMagic, 4);
    w.put(kModelVersion);
    w.put(m.manifest_checksum);

    const auto& c = m.config;
    w.put(static_cast<int32_t>(c.max_depth));
    w.put_f64(c.learning_rate);
    w.put(static_cast<int32_t>(c.num_rounds));
    w.put(static_cast<int32_t>(c.min_leaf));
    w.put(c.seed);
    w.put_f64(c.lambda);
    w.put_f64(c.min_child_weight);
    w.put(static_cast<int32_t>(c.patience));
    w.put(m.trained_at);

    w.put_f64(m.booster.base_score);
    w.put_f64(m.booster.learning_rate);

    const auto& n = m.normalizer;
    w.put(static_cast<uint32_t>(n.mean.size()));
    for (size_t s = 0; s < n.mean.size(); ++s) {
        w.put(static_cast<uint8_t>(n.numeric[s] ? 1 : 0));
        w.put_f64(n.mean[s]);
        w.put_f64(n.stddev[s]);
    }

    const auto& cats = m.encoder.categories();
    w.put(static_cast<uint32_t>(cats.size()));
    for (const auto& slot : cats) {
        w.put(static_cast<uint32_t>(slot.size()));
        for (const auto& name : slot) w.put_str(name);
    }

    w.put(static_cast<uint32_t>(m.booster.trees.size()));
    for (const auto& t : m.booster.trees) {
        w.put(static_cast<uint32_t>(t.nodes.size()));
        for (const auto& nd : t.nodes) {
            w.put(nd.feature);
            w.put_f64(nd.threshold);
            w.put(nd.left);
            w.put(nd.right);
            w.put_f64(nd.value);
        }
    }
    w.put(fnv1a64(w.bytes()));
    return std::move(w.bytes());
}

FakenessModel deserialize_model(std::string_view bytes, const FeatureSchema& schema) {
    if (bytes.size() < 4 + 2 + 8 + 8) throw Error("truncated", "model file is truncated");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error("bad_model", "not a model file (bad magic)");
    const std::string_view body = bytes.substr(0, bytes.size() - 8);
    Reader tail(bytes.substr(bytes.size() - 8));
    if (tail.get<uint64_t>() != fnv1a64(body)) throw Error("truncated", "model file is truncated or damaged");

    Reader r(body.substr(4));
    const auto version = r.get<uint16_t>();
    if (version != kModelVersion)
        throw Error("bad_model", "unsupported model version " + std::to_string(version));
    FakenessModel m;
    m.manifest_checksum = r.get<uint64_t>();
    m.check_schema(schema);

    auto& c = m.config;
    c.max_depth = r.get<int32_t>();
    c.learning_rate = r.get_f64();
    c.num_rounds = r.get<int32_t>();
    c.min_leaf = r.get<int32_t>();
    c.seed = r.get<uint64_t>();
    c.lambda = r.get_f64();
    c.min_child_weight = r.get_f64();
    c.patience = r.get<int32_t>();
    m.trained_at = r.get<int64_t>();
    m.booster.base_score = r.get_f64();
    m.booster.learning_rate = r.get_f64();

    const size_t d = r.count(schema.size());
    if (d != schema.size()) throw Error("manifest_mismatch", "normalizer width does not match the manifest");
    auto& n = m.normalizer;
    n.mean.resize(d);
    n.stddev.resize(d);
    n.numeric.resize(d);
    for (size_t s = 0; s < d; ++s) {
        n.numeric[s] = r.get<uint8_t>() != 0;
        n.mean[s] = r.get_f64();
        n.stddev[s] = r.get_f64();
    }

    std::vector<std::vector<std::string>> cats(r.count(schema.size()));
    for (auto& slot : cats) {
        slot.resize(r.count(bytes.size()));
        for (auto& name : slot) name = r.get_str();
    }
    m.encoder = CategoricalEncoder::from_parts(schema, std::move(cats));

    const size_t width = m.encoder.width();
    m.booster.trees.resize(r.count(bytes.size()));
    for (auto& t : m.booster.trees) {
        t.nodes.resize(r.count(bytes.size()));
        if (t.nodes.empty()) throw Error("bad_model", "model contains an empty tree");
        const auto size = static_cast<int32_t>(t.nodes.size());
        for (int32_t i = 0; i < size; ++i) {
            auto& nd = t.nodes[i];
            nd.feature = r.get<int32_t>();
            nd.threshold = r.get_f64();
            nd.left = r.get<int32_t>();
            nd.right = r.get<int32_t>();
            nd.value = r.get_f64();
            if (!nd.leaf() && (nd.feature >= static_cast<int32_t>(width) || nd.left <= i || nd.right <= i ||
                               nd.left >= size || nd.right >= size))
                throw Error("bad_model", "model contains a malformed tree");
        }
    }
    if (!r.done()) throw Error("bad_model", "trailing bytes in model file");
    return m;
}

void save_model(const FakenessModel& model, const std::filesystem::path& path) {
    const std::string bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("io", "failed writing " + path.string());
}

FakenessModel load_model(const std::filesystem::path& path, const FeatureSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot open model " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_model(ss.str(), schema);
}

nlohmann::json model_to_json(const FakenessModel& m, const FeatureSchema& schema) {
    using nlohmann::json;
    const auto columns = m.encoder.column_names(schema);
    json trees = json::array();
    for (const auto& t : m.booster.trees) {
        json nodes = json::array();
        for (const auto& nd : t.nodes) {
            if (nd.leaf())
                nodes.push_back({{"leaf", nd.value}});
            else
                nodes.push_back({{"feature", columns.at(nd.feature)},
                                 {"threshold", nd.threshold},
                                 {"left", nd.left},
                                 {"right", nd.right}});
        }
        trees.push_back(std::move(nodes));
    }
    json cats = json::object();
    for (size_t s = 0; s < schema.size(); ++s)
        if (schema[s].kind == FeatureKind::categorical) cats[schema[s].name] = m.encoder.categories()[s];
    return {{"format", "FKRS"},
            {"version", kModelVersion},
            {"manifest_checksum", to_hex64(m.manifest_checksum)},
            {"trained_at", m.trained_at},
            {"config",
             {{"max_depth", m.config.max_depth},
              {"learning_rate", m.config.learning_rate},
              {"num_rounds", m.config.num_rounds},
              {"min_leaf", m.config.min_leaf},
              {"seed", m.config.seed},
              {"lambda", m.config.lambda},
              {"min_child_weight", m.config.min_child_weight},
              {"patience", m.config.patience}}},
            {"base_score", m.booster.base_score},
            {"learning_rate", m.booster.learning_rate},
            {"categories", cats},
            {"trees", trees}};
}

}  // namespace factrank
