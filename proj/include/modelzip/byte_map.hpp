#pragma once

#include "modelzip/model.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace modelzip {

// Vocabulary ids a tokenizer reserves for the 256 raw byte values.
class ByteTokenMap {
public:
    // Throws InvalidArgument if the table is not injective.
    explicit ByteTokenMap(const std::array<Symbol, 256>& byte_to_token);

    static ByteTokenMap identity() { return offset(0); }
    // Bytes 0..255 map to ids first..first+255 (e.g. Llama-style <0x00> at 3).
    static ByteTokenMap offset(Symbol first);

    [[nodiscard]] Symbol token(std::uint8_t byte) const noexcept { return byte_to_token_[byte]; }
    [[nodiscard]] std::optional<std::uint8_t> byte(Symbol token) const;
    [[nodiscard]] const std::array<Symbol, 256>& table() const noexcept { return byte_to_token_; }
    [[nodiscard]] Symbol max_token() const noexcept;

    friend bool operator==(const ByteTokenMap& a, const ByteTokenMap& b) { return a.byte_to_token_ == b.byte_to_token_; }

private:
    std::array<Symbol, 256> byte_to_token_;
    std::unordered_map<Symbol, std::uint8_t> token_to_byte_;
};

// Keeps the 256 byte-token probabilities of a vocabulary-wide distribution,
// renormalized, indexed by byte value. Input and output are log2 probabilities.
std::vector<double> restrict_to_bytes(std::span<const double> vocab_log2_probs, const ByteTokenMap& map);
ModelOutput restrict_to_bytes(const ModelOutput& full, const ByteTokenMap& map);

}  // namespace modelzip
