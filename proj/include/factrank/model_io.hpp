#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "factrank/gbdt.hpp"

namespace factrank {

inline constexpr uint16_t kModelVersion = 1;

/// Little-endian container:
///
///   "FKRS" | u16 version | u64 manifest checksum | config | trained_at |
///   base score | rate | normalizer | encoder | trees | u64 FNV-1a of all
///   preceding bytes
///
/// Strings are u32 length + bytes; doubles are IEEE-754 bit patterns, so a
/// round trip is exact.
std::string serialize_model(const FakenessModel& model);

// Throws Error("truncated") for short or damaged input, Error("bad_model")
// for a foreign or unsupported file and Error("manifest_mismatch") when the
// model was trained on another manifest.
FakenessModel deserialize_model(std::string_view bytes, const FeatureSchema& schema = FeatureSchema::standard());

void save_model(const FakenessModel& model, const std::filesystem::path& path);
FakenessModel load_model(const std::filesystem::path& path, const FeatureSchema& schema = FeatureSchema::standard());

// Human-readable dump (not loadable).
nlohmann::json model_to_json(const FakenessModel& model, const FeatureSchema& schema);

}  // namespace factrank
