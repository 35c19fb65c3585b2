#include <doctest.h>

#include <cstring>
#include <functional>

#include "factrank/model_io.hpp"
#include "factrank/util.hpp"
#include "support.hpp"

using namespace factrank;

namespace {

const FakenessModel& trained() {
    static const FakenessModel model = [] {
        SyntheticSpec spec;
        spec.stories = 300;
        spec.fake_fraction = 0.05;
        TrainConfig c;
        c.num_rounds = 25;
        return train_model(testing::synthetic_matrix(spec), c, nullptr, nullptr, 1700000000);
    }();
    return model;
}

std::string error_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("save, load and predict to the last bit") {
    testing::TempDir dir("model");
    SyntheticSpec spec;
    spec.stories = 200;
    spec.seed = 9;
    const auto m = testing::synthetic_matrix(spec);
    save_model(trained(), dir / "m.bin");
    const auto back = load_model(dir / "m.bin");
    const auto a = trained().margins(m), b = back.margins(m);
    for (size_t i = 0; i < a.size(); ++i) CHECK(std::memcmp(&a[i], &b[i], sizeof(double)) == 0);
    CHECK(serialize_model(back) == serialize_model(trained()));
    CHECK(back.trained_at == 1700000000);
    CHECK(back.config == trained().config);
}

TEST_CASE("container starts with the magic and version") {
    const auto bytes = serialize_model(trained());
    CHECK(bytes.substr(0, 4) == "FKRS");
    CHECK(static_cast<uint8_t>(bytes[4]) == kModelVersion);
    CHECK(static_cast<uint8_t>(bytes[5]) == 0);
}

TEST_CASE("altered manifest is rejected") {
    const auto bytes = serialize_model(trained());
    auto specs = FeatureSchema::standard().specs();
    specs[0].name = "renamed";
    const FeatureSchema other(specs);
    CHECK(error_code([&] { deserialize_model(bytes, other); }) == "manifest_mismatch");
}

TEST_CASE("empty and damaged files") {
    testing::TempDir dir("damaged");
    { std::ofstream(dir / "empty.bin"); }
    CHECK(error_code([&] { load_model(dir / "empty.bin"); }) == "truncated");
    const auto bytes = serialize_model(trained());
    CHECK(error_code([&] { deserialize_model(bytes.substr(0, bytes.size() / 2)); }) == "truncated");
    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x40;
    CHECK(error_code([&] { deserialize_model(flipped); }) == "truncated");
    CHECK(error_code([&] { load_model(dir / "absent.bin"); }) != "");
}

TEST_CASE("foreign file is not a model") {
    std::string junk(64, 'x');
    const uint64_t sum = fnv1a64(junk);
    for (int i = 0; i < 8; ++i) junk.push_back(static_cast<char>((sum >> (8 * i)) & 0xff));
    CHECK(error_code([&] { deserialize_model(junk); }) == "bad_model");
}

TEST_CASE("json dump") {
    const auto j = model_to_json(trained(), FeatureSchema::standard());
    CHECK(j["format"] == "FKRS");
    CHECK(j["manifest_checksum"] == to_hex64(FeatureSchema::standard().checksum()));
    CHECK(j["trees"].size() == trained().booster.trees.size());
    CHECK(j["categories"].contains("first_user"));
}

}
