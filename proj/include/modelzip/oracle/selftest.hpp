#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace modelzip::oracle {

struct SelftestResult {
    std::uint64_t seed = 0;
    std::size_t oracle_cases = 0;
    std::size_t oracle_failures = 0;
    // Largest observed (coder bits - oracle ceil(-log2 P)).
    long long max_excess_bits = 0;
    std::vector<std::string> conformance_endpoints;
    std::size_t conformance_failures = 0;
    std::vector<std::string> failures;

    [[nodiscard]] bool passed() const noexcept { return oracle_failures == 0 && conformance_failures == 0; }
};

// Randomized oracle comparison: `cases` sequences of length <= 256 under
// the built-in models; each must round-trip through the finite coder, stay
// within ceil(-log2 P) + 1 + 8 bits, and decode from the oracle's own code.
// Then runs the bridge conformance suite against each built-in mock.
SelftestResult run_selftest(std::uint64_t seed, std::size_t cases = 100);

// Machine-readable summary, one JSON object.
std::string to_json(const SelftestResult& r);

}  // namespace modelzip::oracle
