#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "factrank/corpus.hpp"

namespace factrank {

/// How far fakes drift from unchecked stories, per feature family, in
/// [0,1]. 0 draws the family independently of the label.
struct SignalStrength {
    double content = 0.0;
    double source = 0.0;
    double environment = 0.0;

    // "strong", "medium", "weak" or "none". Throws Error("bad_strength").
    static SignalStrength preset(std::string_view name);
};

struct SyntheticSpec {
    size_t stories = 1000;
    double fake_fraction = 0.03;
    SignalStrength strength = SignalStrength::preset("strong");
    uint64_t seed = 1;
    // Multiplies fake share counts; below 1 gives low-share fakes (demo
    // corpus). 1 keeps both classes on the same share distribution.
    double fake_share_scale = 1.0;
    int64_t start_epoch = 1535760000;  // 2018-09-01T00:00:00Z
    int days = 30;
};

struct SyntheticCorpus {
    std::vector<MessageRecord> messages;  // ascending timestamp
    std::vector<LabelVerdict> labels;     // one per fake story
    std::vector<uint64_t> story_hashes;
    std::vector<int> story_labels;
};

// Deterministic per spec. Throws Error("bad_spec") for a fake fraction
// outside (0,1) or no stories.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

// Writes messages.jsonl and labels.jsonl into dir.
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace factrank
