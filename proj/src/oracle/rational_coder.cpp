#include "modelzip/oracle/rational_coder.hpp"

#include "modelzip/error.hpp"

#include <cmath>

namespace modelzip::oracle {

namespace {

std::size_t bit_width(const cpp_int& v) { return v == 0 ? 0 : boost::multiprecision::msb(v) + 1; }

// log2 of a positive integer with a 64-bit mantissa.
double log2_int(const cpp_int& v) {
    const std::size_t w = bit_width(v);
    if (w <= 64) return std::log2(static_cast<double>(static_cast<std::uint64_t>(v)));
    const cpp_int top = v >> (w - 64);
    return std::log2(static_cast<double>(static_cast<std::uint64_t>(top))) + static_cast<double>(w - 64);
}

}  // namespace

void RationalInterval::push(const QuantizedPmf& pmf, Symbol s) {
    if (s >= pmf.alphabet_size()) throw InvalidArgument("oracle: symbol outside the alphabet");
    const unsigned f = static_cast<unsigned>(pmf.precision());
    low_ = (low_ << f) + width_ * pmf.low(s);
    width_ *= pmf.frequency(s);
    scale_ += f;
}

std::size_t RationalInterval::ideal_bits() const {
    // -log2(W / 2^S) = S - log2 W, and ceil of that is S - floor(log2 W).
    return scale_ - boost::multiprecision::msb(width_);
}

double RationalInterval::neg_log2_probability() const { return static_cast<double>(scale_) - log2_int(width_); }

RationalCode shortest_code(const RationalInterval& interval) {
    // Two guard bits keep every candidate length integral.
    const cpp_int low = interval.low() << 2;
    const cpp_int high = low + (interval.width() << 2);
    const std::size_t scale = interval.scale_bits() + 2;
    for (std::size_t k = 0; k <= scale; ++k) {
        const std::size_t shift = scale - k;
        cpp_int c = low >> shift;
        if ((c << shift) < low) ++c;
        if (((c + 1) << shift) <= high) {
            RationalCode code;
            code.bit_count = k;
            code.bits.assign((k + 7) / 8, 0);
            for (std::size_t i = 0; i < k; ++i)
                if (boost::multiprecision::bit_test(c, static_cast<unsigned>(k - 1 - i)))
                    code.bits[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
            return code;
        }
    }
    throw Error("oracle: no dyadic cell fits the interval", ErrorKind::internal);
}

RationalInterval rational_encode(std::span<const Symbol> symbols, PmfSource& source) {
    RationalInterval interval;
    for (Symbol s : symbols) {
        interval.push(source.next_pmf(), s);
        source.advance(s);
    }
    return interval;
}

std::vector<Symbol> rational_decode(const RationalCode& code, std::size_t count, PmfSource& source) {
    cpp_int c = 0;
    for (std::size_t i = 0; i < code.bit_count; ++i) {
        c <<= 1;
        if (code.bits[i / 8] & (0x80u >> (i % 8))) c += 1;
    }
    const auto k = static_cast<unsigned>(code.bit_count);
    RationalInterval interval;
    std::vector<Symbol> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const QuantizedPmf& pmf = source.next_pmf();
        const unsigned f = static_cast<unsigned>(pmf.precision());
        const auto s_bits = static_cast<unsigned>(interval.scale_bits());
        // target = floor((v * 2^S - L) * 2^F / W) with v = c / 2^k.
        const cpp_int num = (c << (s_bits + f)) - ((interval.low() << f) << k);
        const cpp_int den = interval.width() << k;
        if (num < 0) throw CodecError("oracle: code lies below the interval", i);
        const cpp_int target = num / den;
        if (target >= pmf.total()) throw CodecError("oracle: code lies above the interval", i);
        const Symbol s = pmf.find(static_cast<std::uint32_t>(target));
        out.push_back(s);
        interval.push(pmf, s);
        source.advance(s);
    }
    return out;
}

double neg_log2(const cpp_rational& p) {
    if (p <= 0) throw InvalidArgument("oracle: log of a non-positive rational");
    return log2_int(boost::multiprecision::denominator(p)) - log2_int(boost::multiprecision::numerator(p));
}

}  // namespace modelzip::oracle
