#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mixlinear/model.hpp"

namespace mixlinear::checkpoint {

inline constexpr std::uint32_t kFormatVersion = 1;

/// One typed value in the container: integers, 64-bit floats, or text.
using Value = std::variant<std::vector<std::int64_t>, std::vector<double>, std::string>;

/// Flat key/value container. Keys are written in lexicographic order, so
/// equal contents always serialize to equal bytes.
///
/// Layout (all integers little-endian):
///   "MIXLINCK" | u32 version | u32 entry count |
///   entries: u32 key length, key bytes, u8 kind ('i','f','s'), u64 count, payload
/// Float payloads are IEEE-754 binary64, little-endian.
struct Container {
    std::uint32_t version = kFormatVersion;
    std::map<std::string, Value> entries;

    const std::vector<double>& floats(const std::string& key) const;
    const std::vector<std::int64_t>& ints(const std::string& key) const;
    const std::string& text(const std::string& key) const;
};

std::vector<std::uint8_t> encode(const Container& c);
Container decode(const std::vector<std::uint8_t>& bytes);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

struct Checkpoint {
    model::ModelConfig config;
    model::MixLinearParams params;
};

Container to_container(const model::ModelConfig& config, const model::MixLinearParams& params);
Checkpoint from_container(const Container& c);

void save(const std::filesystem::path& path, const model::ModelConfig& config, const model::MixLinearParams& params);
Checkpoint load(const std::filesystem::path& path);

}  // namespace mixlinear::checkpoint
