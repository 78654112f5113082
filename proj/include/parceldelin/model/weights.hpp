#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "parceldelin/nn/tensor.hpp"

namespace parceldelin::model {

// Binary weight container:
//   "PSWT" | u32 version | u32 count | count x entry
//   entry = u16 name_len | name (UTF-8) | u8 ndim | u32 dims[ndim] | f32 payload
// All integers and floats little-endian.
inline constexpr char kWeightMagic[4] = {'P', 'S', 'W', 'T'};
inline constexpr std::uint32_t kWeightVersion = 1;

struct WeightEntry {
    std::string name;
    nn::Shape dims;
    std::vector<float> values;

    friend bool operator==(const WeightEntry&, const WeightEntry&) = default;
};

std::vector<std::uint8_t> encode_weights(std::span<const WeightEntry> entries);
// Throws FormatError on bad magic, unknown version, truncation or trailing bytes.
std::vector<WeightEntry> decode_weights(std::span<const std::uint8_t> bytes);

void write_weight_file(const std::filesystem::path& path, std::span<const WeightEntry> entries);
std::vector<WeightEntry> read_weight_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace parceldelin::model
