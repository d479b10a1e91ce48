#include "doctest.h"
#include "test_support.hpp"

#include "modelzip/arithmetic_coder.hpp"
#include "modelzip/model_registry.hpp"
#include "modelzip/oracle/rational_coder.hpp"
#include "modelzip/oracle/selftest.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace modelzip;
using namespace modelzip::oracle;

namespace {

// The same table at every position.
class FixedSource final : public PmfSource {
public:
    explicit FixedSource(QuantizedPmf pmf) : pmf_(std::move(pmf)) {}
    const QuantizedPmf& next_pmf() override { return pmf_; }
    void advance(Symbol) override {}

private:
    QuantizedPmf pmf_;
};

}  // namespace

TEST_SUITE("oracle") {
    TEST_CASE("dyadic table gives exact interval arithmetic") {
        FixedSource source(quantize_pmf(std::vector<double>{0.5, 0.25, 0.25}, 16));
        const std::vector<Symbol> symbols{0, 1, 2, 2};
        const auto interval = rational_encode(symbols, source);
        // P = 1/2 * 1/4 * 1/4 * 1/4 = 2^-7.
        CHECK(interval.ideal_bits() == 7);
        CHECK(interval.neg_log2_probability() == 7.0);
        CHECK(cpp_rational(interval.width(), cpp_int(1) << interval.scale_bits()) == cpp_rational(1, 128));
        // low = 0 + 1/2 * (1/2 + 1/4 * (3/4 + 1/4 * 3/4)) = 0.25 + 0.09375 + 0.0234375
        CHECK(cpp_rational(interval.low(), cpp_int(1) << interval.scale_bits()) == cpp_rational(47, 128));
        const auto code = shortest_code(interval);
        CHECK(code.bit_count == 7);
        FixedSource again(quantize_pmf(std::vector<double>{0.5, 0.25, 0.25}, 16));
        CHECK(rational_decode(code, symbols.size(), again) == symbols);
    }

    TEST_CASE("shortest code never exceeds ideal plus one bit") {
        std::mt19937_64 rng(5);
        for (int t = 0; t < 200; ++t) {
            std::vector<double> probs(2 + rng() % 20);
            for (auto& p : probs) p = 0.01 + static_cast<double>(rng() % 1000);
            double sum = 0;
            for (double p : probs) sum += p;
            for (auto& p : probs) p /= sum;
            const auto pmf = quantize_pmf(probs, 12);
            std::vector<Symbol> symbols(1 + rng() % 60);
            for (auto& s : symbols) s = static_cast<Symbol>(rng() % probs.size());
            FixedSource source(pmf);
            const auto interval = rational_encode(symbols, source);
            const auto code = shortest_code(interval);
            CHECK(code.bit_count <= interval.ideal_bits() + 1);
            FixedSource replay(pmf);
            CHECK(rational_decode(code, symbols.size(), replay) == symbols);

            // The finite coder stays within the documented margin of the oracle.
            FixedSource finite(pmf);
            const auto frame = encode_symbols(symbols, finite, CoderConfig{32, 12});
            CHECK(frame.bit_length <= interval.ideal_bits() + 1 + 8);
        }
    }

    TEST_CASE("neg_log2 is accurate") {
        CHECK(neg_log2(cpp_rational(1, 3)) == doctest::Approx(std::log2(3.0)).epsilon(1e-15));
        CHECK(neg_log2(cpp_rational(1)) == 0.0);
        const cpp_rational tiny(cpp_int(1), cpp_int(1) << 5000);
        CHECK(neg_log2(tiny) == 5000.0);
        CHECK(neg_log2(cpp_rational(3, 4)) == doctest::Approx(2.0 - std::log2(3.0)).epsilon(1e-14));
    }

    TEST_CASE("model-driven oracle round trip") {
        const auto symbols = modelzip::test::as_symbols(std::string("abracadabra, abracadabra"));
        auto model = make_model("adaptive:1");
        model->reset();
        ModelPmfSource source(*model, 16);
        const auto interval = rational_encode(symbols, source);
        const auto code = shortest_code(interval);
        model->reset();
        ModelPmfSource replay(*model, 16);
        CHECK(rational_decode(code, symbols.size(), replay) == symbols);
    }

    TEST_CASE("selftest passes and reports JSON") {
        const auto result = run_selftest(11, 20);
        CHECK(result.passed());
        CHECK(result.oracle_cases == 20);
        CHECK(result.max_excess_bits <= 9);
        CHECK(!result.conformance_endpoints.empty());
        const auto j = nlohmann::json::parse(to_json(result));
        CHECK(j["seed"] == 11);
    }
}
