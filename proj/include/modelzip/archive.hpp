#pragma once

#include "modelzip/arithmetic_coder.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace modelzip {

// Container for concatenated chunk codes.
//
// Layout (little-endian):
//   "MZP1" | u8 version | u8 register_width | u8 precision | u32 alphabet_size
//   | u16 model_id length | model_id bytes | u32 chunk count
//   | per chunk: u32 symbol_count | u32 bit_length | ceil(bit_length/8) payload bytes
struct Archive {
    static constexpr std::array<char, 4> kMagic{'M', 'Z', 'P', '1'};
    static constexpr std::uint8_t kVersion = 1;

    std::uint8_t version = kVersion;
    std::uint8_t register_width = kDefaultRegisterWidth;
    std::uint8_t precision = kDefaultPrecision;
    std::uint32_t alphabet_size = 0;
    std::string model_id;
    std::vector<ChunkFrame> chunks;

    // Sum of chunk payload sizes; the header is not counted.
    [[nodiscard]] std::size_t payload_bytes() const noexcept;
    [[nodiscard]] std::size_t symbol_count() const noexcept;
    [[nodiscard]] CoderConfig coder_config() const { return {register_width, precision}; }

    friend bool operator==(const Archive&, const Archive&) = default;
};

std::vector<std::uint8_t> serialize_archive(const Archive& archive);
Archive parse_archive(std::span<const std::uint8_t> bytes);

struct StreamStats {
    // Per chunk, -sum log2 q over the tables used.
    std::vector<double> ideal_bits;
};

// Splits into chunks of `chunk_size` symbols (the last may be short) and
// codes each under a freshly reset model.
Archive encode_stream(std::span<const Symbol> symbols, Model& model, std::size_t chunk_size,
                      const CoderConfig& config = {}, StreamStats* stats = nullptr);
std::vector<Symbol> decode_stream(const Archive& archive, Model& model);

}  // namespace modelzip
