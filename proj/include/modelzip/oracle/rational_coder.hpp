#pragma once

#include "modelzip/arithmetic_coder.hpp"
#include "modelzip/quantized_pmf.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Infinite-precision interval coder over dyadic tables. Independent of the
// finite-register coder; used to bound and cross-check it.
namespace modelzip::oracle {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

// Tracks [low, low + width) exactly as integers over 2^scale_bits.
class RationalInterval {
public:
    void push(const QuantizedPmf& pmf, Symbol s);

    [[nodiscard]] const cpp_int& low() const noexcept { return low_; }
    [[nodiscard]] const cpp_int& width() const noexcept { return width_; }
    [[nodiscard]] std::size_t scale_bits() const noexcept { return scale_; }
    // ceil(-log2 P) with P = width / 2^scale_bits, the product of coded probabilities.
    [[nodiscard]] std::size_t ideal_bits() const;
    // -log2 P as a double.
    [[nodiscard]] double neg_log2_probability() const;

private:
    cpp_int low_ = 0;
    cpp_int width_ = 1;
    std::size_t scale_ = 0;
};

struct RationalCode {
    std::vector<std::uint8_t> bits;  // MSB first
    std::size_t bit_count = 0;
};

// Shortest binary fraction c / 2^k whose dyadic cell [c, c+1) / 2^k lies
// inside the interval. Its length never exceeds ideal_bits() + 1.
RationalCode shortest_code(const RationalInterval& interval);

// Decodes `count` symbols from a code produced by shortest_code under the
// same sequence of tables.
std::vector<Symbol> rational_decode(const RationalCode& code, std::size_t count, PmfSource& source);

// Interval after coding `symbols` under `source`.
RationalInterval rational_encode(std::span<const Symbol> symbols, PmfSource& source);

// -log2 of a positive rational, accurate to double rounding.
double neg_log2(const cpp_rational& p);

}  // namespace modelzip::oracle
