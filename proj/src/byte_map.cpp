#include "modelzip/byte_map.hpp"

#include "modelzip/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace modelzip {

ByteTokenMap::ByteTokenMap(const std::array<Symbol, 256>& byte_to_token) : byte_to_token_(byte_to_token) {
    for (std::size_t b = 0; b < 256; ++b) {
        auto [it, inserted] = token_to_byte_.emplace(byte_to_token_[b], static_cast<std::uint8_t>(b));
        if (!inserted)
            throw InvalidArgument("byte token map is not injective: bytes " + std::to_string(it->second) + " and " +
                                  std::to_string(b) + " share token " + std::to_string(byte_to_token_[b]));
    }
}

ByteTokenMap ByteTokenMap::offset(Symbol first) {
    std::array<Symbol, 256> t{};
    for (Symbol b = 0; b < 256; ++b) t[b] = first + b;
    return ByteTokenMap(t);
}

std::optional<std::uint8_t> ByteTokenMap::byte(Symbol token) const {
    auto it = token_to_byte_.find(token);
    if (it == token_to_byte_.end()) return std::nullopt;
    return it->second;
}

Symbol ByteTokenMap::max_token() const noexcept {
    return *std::max_element(byte_to_token_.begin(), byte_to_token_.end());
}

std::vector<double> restrict_to_bytes(std::span<const double> vocab_log2_probs, const ByteTokenMap& map) {
    if (map.max_token() >= vocab_log2_probs.size())
        throw InvalidArgument("byte token map references token " + std::to_string(map.max_token()) +
                              " outside a vocabulary of " + std::to_string(vocab_log2_probs.size()));
    std::vector<double> out(256);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < 256; ++b) {
        out[b] = vocab_log2_probs[map.token(static_cast<std::uint8_t>(b))];
        if (std::isnan(out[b])) throw InvalidArgument("non-finite log probability for byte token");
        peak = std::max(peak, out[b]);
    }
    if (!std::isfinite(peak)) throw InvalidArgument("byte tokens carry no probability mass");
    double sum = 0.0;
    for (double v : out) sum += std::exp2(v - peak);
    const double log_norm = peak + std::log2(sum);
    for (auto& v : out) v -= log_norm;
    return out;
}

ModelOutput restrict_to_bytes(const ModelOutput& full, const ByteTokenMap& map) {
    if (!full.log2_probs) throw InvalidArgument("restriction needs the full log2 distribution");
    ModelOutput out;
    out.log2_probs = restrict_to_bytes(*full.log2_probs, map);
    return out;
}

}  // namespace modelzip
