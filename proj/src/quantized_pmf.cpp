#include "modelzip/quantized_pmf.hpp"

#include "modelzip/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

namespace modelzip {

namespace {

void check_precision(int precision, std::size_t alphabet) {
    if (precision < 1 || precision > 30)
        throw InvalidArgument("precision must be in [1, 30], got " + std::to_string(precision));
    if (alphabet < 2) throw InvalidArgument("alphabet must have at least 2 symbols");
    if (alphabet > (std::size_t{1} << precision))
        throw InvalidArgument("alphabet of " + std::to_string(alphabet) + " symbols does not fit in 2^" +
                              std::to_string(precision));
}

// Adds one unit to the `deficit` symbols with the largest remainders
// (lowest index first on ties).
template <typename Rem>
void distribute_deficit(std::vector<std::uint32_t>& freqs, const std::vector<Rem>& rems, std::size_t deficit) {
    if (deficit == 0) return;
    thread_local std::vector<std::uint32_t> order;
    order.resize(freqs.size());
    std::iota(order.begin(), order.end(), 0u);
    auto before = [&](std::uint32_t a, std::uint32_t b) { return rems[a] > rems[b] || (rems[a] == rems[b] && a < b); };
    if (deficit < order.size())
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(deficit), order.end(), before);
    for (std::size_t i = 0; i < deficit; ++i) ++freqs[order[i % order.size()]];
}

// Removes `excess` units from the symbols with the smallest remainders that
// still have a unit to give (highest index first on ties). Only reachable
// through float rounding in the real-valued path.
template <typename Rem>
void remove_excess(std::vector<std::uint32_t>& freqs, const std::vector<Rem>& rems, std::size_t excess) {
    std::vector<std::uint32_t> order(freqs.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return rems[a] < rems[b] || (rems[a] == rems[b] && a > b); });
    for (std::size_t i = 0; excess > 0; i = (i + 1) % order.size()) {
        if (freqs[order[i]] > 0) {
            --freqs[order[i]];
            --excess;
        }
    }
}

// Raises zero frequencies to 1, paying for each with one unit from the
// current largest frequency.
void repair_zeros(std::vector<std::uint32_t>& freqs) {
    std::size_t zeros = 0;
    for (auto& f : freqs) {
        if (f == 0) {
            f = 1;
            ++zeros;
        }
    }
    if (zeros == 0) return;
    // (frequency, -index): the top is the largest frequency with the lowest index.
    using Entry = std::pair<std::uint32_t, std::int64_t>;
    std::priority_queue<Entry> heap;
    for (std::size_t i = 0; i < freqs.size(); ++i)
        if (freqs[i] > 1) heap.emplace(freqs[i], -static_cast<std::int64_t>(i));
    while (zeros > 0) {
        auto [f, neg] = heap.top();
        heap.pop();
        auto i = static_cast<std::size_t>(-neg);
        --freqs[i];
        --zeros;
        if (freqs[i] > 1) heap.emplace(freqs[i], neg);
    }
}

struct WeightClass {
    std::uint64_t key;
    std::uint64_t floor;
    std::uint64_t rem;
    std::uint32_t members;
    std::uint32_t bonus;
};

// Largest-remainder assignment computed once per distinct key, where
// weight_of(key) is the symbol weight. Symbols sharing a weight share floor
// and remainder, so count models with few distinct counts avoid a per-symbol
// selection. Writes the cumulative table into `out` and returns true when no
// frequency is zero. Returns false with `out` unspecified when a key does not
// fit the lookup table or a zero frequency needs repair.
template <class Key, class WeightOf>
bool quantize_by_class(std::span<const Key> keys, WeightOf weight_of, std::uint64_t sum, int precision,
                       QuantizedPmf& out) {
    constexpr std::uint64_t kMaxSlot = std::uint64_t{1} << 16;
    thread_local std::vector<std::int32_t> slot;  // key -> class index, -1 when unused
    thread_local std::vector<WeightClass> classes;
    thread_local std::vector<std::uint32_t> order;
    thread_local std::vector<std::uint32_t> class_of;
    if (slot.empty()) slot.assign(kMaxSlot, -1);
    classes.clear();
    auto release = [&] {
        for (const auto& c : classes) slot[c.key] = -1;
    };
    const std::size_t n = keys.size();
    class_of.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t key = keys[i];
        if (key >= kMaxSlot) {
            release();
            return false;
        }
        std::int32_t c = slot[key];
        if (c < 0) {
            c = static_cast<std::int32_t>(classes.size());
            slot[key] = c;
            const std::uint64_t numer = weight_of(key) << precision;
            classes.push_back({key, numer / sum, numer % sum, 0, 0});
        }
        ++classes[static_cast<std::size_t>(c)].members;
        class_of[i] = static_cast<std::uint32_t>(c);
    }
    std::uint64_t assigned = 0;
    for (const auto& c : classes) assigned += c.floor * c.members;
    std::uint64_t remaining = (std::uint64_t{1} << precision) - assigned;

    order.resize(classes.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [](std::uint32_t a, std::uint32_t b) { return classes[a].rem > classes[b].rem; });
    for (std::size_t k = 0; k < order.size() && remaining > 0;) {
        // Classes with equal remainders form one group; ties go to lower indices.
        std::size_t end = k;
        std::uint64_t group = 0;
        while (end < order.size() && classes[order[end]].rem == classes[order[k]].rem) group += classes[order[end++]].members;
        const std::uint32_t mark = group <= remaining ? 1 : 2;
        for (std::size_t j = k; j < end; ++j) classes[order[j]].bonus = mark;
        if (mark == 2) break;
        remaining -= group;
        k = end;
    }
    for (auto& c : classes) c.floor += (c.bonus == 1);

    auto& cum = out.mutable_cumulative();
    cum.resize(n + 1);
    cum[0] = 0;
    std::uint64_t acc = 0;
    bool has_zero = false;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = classes[class_of[i]];
        std::uint64_t f = c.floor;
        if (c.bonus == 2 && remaining > 0) {
            ++f;
            --remaining;
        }
        has_zero |= (f == 0);
        acc += f;
        cum[i + 1] = static_cast<std::uint32_t>(acc);
    }
    out.set_precision(precision);
    release();
    return !has_zero;
}

void write_cumulative(const std::vector<std::uint32_t>& freqs, int precision, QuantizedPmf& out) {
    auto& cum = out.mutable_cumulative();
    cum.resize(freqs.size() + 1);
    cum[0] = 0;
    for (std::size_t i = 0; i < freqs.size(); ++i) cum[i + 1] = cum[i] + freqs[i];
    out.set_precision(precision);
}

}  // namespace

QuantizedPmf::QuantizedPmf(std::vector<std::uint32_t> cum, int precision)
    : cum_(std::move(cum)), precision_(precision) {
    validate(precision_ + 2);
}

QuantizedPmf QuantizedPmf::from_frequencies(std::span<const std::uint32_t> freqs, int precision) {
    std::vector<std::uint32_t> cum(freqs.size() + 1, 0);
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        running += freqs[i];
        if (running > (std::uint64_t{1} << 31)) throw InvalidArgument("frequencies overflow");
        cum[i + 1] = static_cast<std::uint32_t>(running);
    }
    return QuantizedPmf(std::move(cum), precision);
}

Symbol QuantizedPmf::find(std::uint32_t target) const {
    auto it = std::upper_bound(cum_.begin() + 1, cum_.end(), target);
    return static_cast<Symbol>(std::distance(cum_.begin(), it) - 1);
}

double QuantizedPmf::bits(Symbol s) const {
    return static_cast<double>(precision_) - std::log2(static_cast<double>(frequency(s)));
}

Symbol QuantizedPmf::argmax() const {
    Symbol best = 0;
    for (Symbol s = 1; s < alphabet_size(); ++s)
        if (frequency(s) > frequency(best)) best = s;
    return best;
}

void QuantizedPmf::validate(int register_width) const {
    if (precision_ < 1 || precision_ > 30) throw InvalidArgument("pmf precision out of range");
    if (precision_ > register_width - 2)
        throw InvalidArgument("pmf precision " + std::to_string(precision_) + " exceeds register width " +
                              std::to_string(register_width) + " - 2");
    if (cum_.size() < 3) throw InvalidArgument("pmf alphabet must have at least 2 symbols");
    if (cum_.front() != 0) throw InvalidArgument("pmf cum[0] must be 0");
    if (cum_.back() != total())
        throw InvalidArgument("pmf total " + std::to_string(cum_.back()) + " != 2^" + std::to_string(precision_));
    for (std::size_t i = 0; i + 1 < cum_.size(); ++i)
        if (cum_[i + 1] <= cum_[i])
            throw InvalidArgument("pmf symbol " + std::to_string(i) + " has zero frequency");
}

void quantize_pmf_into(std::span<const double> probs, int precision, QuantizedPmf& out) {
    check_precision(precision, probs.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!std::isfinite(probs[i]) || probs[i] < 0.0)
            throw InvalidArgument("probability " + std::to_string(i) + " is negative or non-finite");
        sum += probs[i];
    }
    if (std::fabs(sum - 1.0) > 1e-6) throw InvalidArgument("probabilities sum to " + std::to_string(sum));

    const auto total = std::uint64_t{1} << precision;
    const double scale = static_cast<double>(total) / sum;
    thread_local std::vector<std::uint32_t> freqs;
    thread_local std::vector<double> rems;
    freqs.resize(probs.size());
    rems.resize(probs.size());
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        double scaled = probs[i] * scale;
        double whole = std::floor(scaled);
        freqs[i] = static_cast<std::uint32_t>(whole);
        rems[i] = scaled - whole;
        assigned += freqs[i];
    }
    if (assigned <= total)
        distribute_deficit(freqs, rems, total - assigned);
    else
        remove_excess(freqs, rems, assigned - total);
    repair_zeros(freqs);
    write_cumulative(freqs, precision, out);
}

void quantize_counts_into(std::span<const std::uint32_t> counts, std::uint64_t count_total, std::uint64_t offset,
                          int precision, QuantizedPmf& out) {
    check_precision(precision, counts.size());
    const std::uint64_t sum = 2 * count_total + offset * counts.size();
    if (offset > 0 && count_total < (std::uint64_t{1} << 31) &&
        quantize_by_class(counts, [offset](std::uint64_t c) { return 2 * c + offset; }, sum, precision, out))
        return;
    thread_local std::vector<std::uint64_t> w;
    w.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) w[i] = 2 * std::uint64_t{counts[i]} + offset;
    quantize_weights_into(w, precision, out);
}

QuantizedPmf quantize_pmf(std::span<const double> probs, int precision) {
    QuantizedPmf out;
    quantize_pmf_into(probs, precision, out);
    return out;
}

void quantize_weights_into(std::span<const std::uint64_t> weights, int precision, QuantizedPmf& out) {
    check_precision(precision, weights.size());
    if (weights.size() > 65536) throw InvalidArgument("integer quantization supports at most 65536 symbols");
    std::uint64_t sum = 0;
    for (auto w : weights) {
        if (w > (std::uint64_t{1} << 32)) throw InvalidArgument("weight too large");
        sum += w;
    }
    if (sum == 0) throw InvalidArgument("weights sum to zero");

    const auto total = std::uint64_t{1} << precision;
    const double inv = static_cast<double>(total) / static_cast<double>(sum);
    const std::size_t n = weights.size();
    thread_local std::vector<std::uint32_t> freqs;
    // (remainder << 16) | (65535 - index): larger key = larger remainder, then lower index.
    thread_local std::vector<std::uint64_t> keys;
    freqs.resize(n);
    keys.resize(n);
    bool has_zero = false;
    if (quantize_by_class(weights, [](std::uint64_t w) { return w; }, sum, precision, out)) return;
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        // Floating estimate, then exact integer correction of floor(w * 2^F / sum).
        const std::uint64_t numer = weights[i] << precision;
        auto f = static_cast<std::uint64_t>(static_cast<double>(weights[i]) * inv);
        auto r = static_cast<std::int64_t>(numer) - static_cast<std::int64_t>(f * sum);
        while (r < 0) {
            --f;
            r += static_cast<std::int64_t>(sum);
        }
        while (r >= static_cast<std::int64_t>(sum)) {
            ++f;
            r -= static_cast<std::int64_t>(sum);
        }
        freqs[i] = static_cast<std::uint32_t>(f);
        keys[i] = (static_cast<std::uint64_t>(r) << 16) | (65535u - i);
        assigned += f;
    }
    // sum <= 2^48, so remainders fit above the 16 index bits.
    const std::size_t deficit = total - assigned;
    if (deficit > 0) {
        if (deficit < n) std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(deficit) - 1,
                                          keys.end(), std::greater<>());
        for (std::size_t k = 0; k < deficit; ++k) ++freqs[65535u - (keys[k % n] & 0xFFFFu)];
    }
    for (auto f : freqs) has_zero |= (f == 0);
    if (has_zero) repair_zeros(freqs);
    write_cumulative(freqs, precision, out);
}

}  // namespace modelzip
