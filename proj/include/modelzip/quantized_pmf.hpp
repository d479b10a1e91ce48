#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace modelzip {

using Symbol = std::uint32_t;

inline constexpr int kDefaultPrecision = 16;
inline constexpr int kDefaultRegisterWidth = 32;

// Integer cumulative-frequency table with denominator 2^precision.
// cum[0] = 0, cum[alphabet_size] = 2^precision, every symbol has frequency >= 1.
class QuantizedPmf {
public:
    QuantizedPmf() = default;

    // Validates and adopts a cumulative table.
    QuantizedPmf(std::vector<std::uint32_t> cum, int precision);

    static QuantizedPmf from_frequencies(std::span<const std::uint32_t> freqs, int precision);

    [[nodiscard]] std::size_t alphabet_size() const noexcept { return cum_.empty() ? 0 : cum_.size() - 1; }
    [[nodiscard]] int precision() const noexcept { return precision_; }
    [[nodiscard]] std::uint32_t total() const noexcept { return std::uint32_t{1} << precision_; }
    [[nodiscard]] std::uint32_t low(Symbol s) const { return cum_[s]; }
    [[nodiscard]] std::uint32_t high(Symbol s) const { return cum_[s + 1]; }
    [[nodiscard]] std::uint32_t frequency(Symbol s) const { return cum_[s + 1] - cum_[s]; }
    [[nodiscard]] std::span<const std::uint32_t> cumulative() const noexcept { return cum_; }

    // Symbol s with low(s) <= target < high(s). Requires target < total().
    [[nodiscard]] Symbol find(std::uint32_t target) const;

    // -log2 of the quantized probability of s.
    [[nodiscard]] double bits(Symbol s) const;

    [[nodiscard]] Symbol argmax() const;

    // Throws InvalidArgument when an invariant is broken (including precision
    // too large for the given coder register width).
    void validate(int register_width = kDefaultRegisterWidth) const;

    friend bool operator==(const QuantizedPmf&, const QuantizedPmf&) = default;

    // Buffer access for producers that fill the table in place; call
    // validate() or trust the producer.
    std::vector<std::uint32_t>& mutable_cumulative() noexcept { return cum_; }
    void set_precision(int precision) noexcept { precision_ = precision; }

private:
    std::vector<std::uint32_t> cum_;
    int precision_ = kDefaultPrecision;
};

// Largest-remainder quantization of real probabilities to 2^precision, then
// every zero frequency is raised to 1 with the deficit taken one unit at a
// time from the current largest frequency (lowest index on ties).
// Remainder ties are broken by lowest symbol index. Deterministic.
QuantizedPmf quantize_pmf(std::span<const double> probs, int precision = kDefaultPrecision);
void quantize_pmf_into(std::span<const double> probs, int precision, QuantizedPmf& out);

// Same scheme over exact integer weights (probability_i = w_i / sum w).
// Used by count-based models so the coded table never depends on float rounding.
void quantize_weights_into(std::span<const std::uint64_t> weights, int precision, QuantizedPmf& out);

// quantize_weights_into over weights 2 * counts[i] + offset, where count_total
// is the sum of counts. Output is identical to the weights form.
void quantize_counts_into(std::span<const std::uint32_t> counts, std::uint64_t count_total, std::uint64_t offset,
                          int precision, QuantizedPmf& out);

}  // namespace modelzip
