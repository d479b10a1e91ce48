#include "doctest.h"
#include "test_support.hpp"

#include "modelzip/arithmetic_coder.hpp"
#include "modelzip/error.hpp"
#include "modelzip/model.hpp"
#include "modelzip/model_registry.hpp"
#include "modelzip/oracle/rational_coder.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

using namespace modelzip;
using modelzip::test::random_bytes;

namespace {

std::vector<Symbol> random_symbols(std::mt19937_64& rng, std::size_t n, std::size_t alphabet) {
    std::vector<Symbol> out(n);
    for (auto& s : out) s = static_cast<Symbol>(rng() % alphabet);
    return out;
}

std::vector<Symbol> skewed_symbols(std::mt19937_64& rng, std::size_t n) {
    std::geometric_distribution<int> g(0.3);
    std::vector<Symbol> out(n);
    for (auto& s : out) s = static_cast<Symbol>(std::min(g(rng), 255));
    return out;
}

}  // namespace

TEST_SUITE("arithmetic_coder") {
    TEST_CASE("uniform bytes cost 8 bits each plus flush") {
        UniformModel model;
        const auto bytes = random_bytes(1000, 1);
        const std::vector<Symbol> symbols(bytes.begin(), bytes.end());
        const auto frame = encode_chunk(symbols, model);
        CHECK(frame.bit_length >= 8000);
        CHECK(frame.bit_length <= 8008);
        CHECK(frame.payload.size() == (frame.bit_length + 7) / 8);
        CHECK(decode_chunk(frame, model) == symbols);
    }

    TEST_CASE("dyadic three-symbol sequence") {
        const auto pmf = quantize_pmf(std::vector<double>{0.5, 0.25, 0.25}, 16);
        const std::vector<QuantizedPmf> rows(3, pmf);
        const std::vector<Symbol> symbols{0, 1, 0};
        ReplayPmfSource source(rows);
        CodingStats stats;
        const auto frame = encode_symbols(symbols, source, {}, &stats);
        CHECK(stats.ideal_bits == 4.0);
        CHECK(frame.bit_length <= 12);
        ReplayPmfSource replay(rows);
        CHECK(decode_symbols(frame, replay, {}) == symbols);
    }

    TEST_CASE("64-byte strings under adaptive order 0 stay within 8 bits of the exact oracle") {
        std::mt19937_64 rng(2);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<Symbol> symbols;
            if (trial % 2 == 0) {
                for (auto b : random_bytes(64, rng())) symbols.push_back(b);
            } else {
                const std::string text = "the quick brown fox jumps over the lazy dog, again and again....";
                for (int i = 0; i < 64; ++i) symbols.push_back(static_cast<unsigned char>(text[(i * 7 + trial) % 64]));
            }
            AdaptiveModel model(256, 0, 1.0);
            const auto frame = encode_chunk(symbols, model);

            AdaptiveModel oracle_model(256, 0, 1.0);
            ModelPmfSource source(oracle_model, 16);
            const auto interval = oracle::rational_encode(symbols, source);
            const auto code = oracle::shortest_code(interval);
            CHECK(code.bit_count <= interval.ideal_bits() + 1);
            CHECK(frame.bit_length <= code.bit_count + 8);
        }
    }

    TEST_CASE("single symbol round trip") {
        UniformModel model;
        const std::vector<Symbol> one{42};
        const auto frame = encode_chunk(one, model);
        CHECK(frame.bit_length >= 8);
        CHECK(decode_chunk(frame, model) == one);
    }

    TEST_CASE("10000 random bytes under adaptive order 2") {
        auto model = make_model("adaptive:2");
        const auto bytes = random_bytes(10000, 3);
        const std::vector<Symbol> symbols(bytes.begin(), bytes.end());
        const auto frame = encode_chunk(symbols, *model);
        CHECK(decode_chunk(frame, *model) == symbols);
    }

    TEST_CASE("truncated payload names the failing symbol") {
        UniformModel model;
        const auto bytes = random_bytes(1000, 4);
        const std::vector<Symbol> symbols(bytes.begin(), bytes.end());
        auto frame = encode_chunk(symbols, model);
        REQUIRE(frame.bit_length == 8002);  // 8 shifts per symbol plus 2
        frame.payload.pop_back();
        // Bit 8000 is first missing. The decoder holds 32 bits, so it needs
        // that bit at shift 7969, which happens while decoding symbol 996.
        try {
            decode_chunk(frame, model);
            FAIL("truncation went unnoticed");
        } catch (const CodecError& e) {
            REQUIRE(e.symbol_index().has_value());
            CHECK(*e.symbol_index() == 996);
            CHECK(std::string(e.what()).find("symbol 996") != std::string::npos);
        }
    }

    TEST_CASE("determinism: identical encodes are byte-identical") {
        auto a = make_model("kt:1");
        auto b = make_model("kt:1");
        std::mt19937_64 rng(5);
        const auto symbols = skewed_symbols(rng, 5000);
        CHECK(encode_chunk(symbols, *a) == encode_chunk(symbols, *b));
    }

    TEST_CASE("prefix safety: padding bits after bit_length are never read") {
        std::mt19937_64 rng(6);
        for (int trial = 0; trial < 50; ++trial) {
            auto model = make_model(trial % 2 ? "adaptive:1" : "uniform");
            const auto symbols = skewed_symbols(rng, 1 + rng() % 500);
            auto frame = encode_chunk(symbols, *model);
            const unsigned used = frame.bit_length % 8;
            if (used == 0) continue;
            frame.payload.back() ^= static_cast<std::uint8_t>((1u << (8 - used)) - 1);
            CHECK(decode_chunk(frame, *model) == symbols);
        }
    }

    TEST_CASE("payload longer than the bit length is rejected") {
        UniformModel model;
        auto frame = encode_chunk(std::vector<Symbol>{1, 2, 3}, model);
        frame.payload.push_back(0);
        CHECK_THROWS_AS(decode_chunk(frame, model), FormatError);
    }

    TEST_CASE("decoding under a different model fails or differs") {
        std::mt19937_64 rng(7);
        std::size_t detected = 0, trials = 0;
        for (int trial = 0; trial < 20; ++trial) {
            const auto symbols = skewed_symbols(rng, 2000);
            auto enc = make_model("adaptive:0");
            auto dec = make_model("uniform");
            const auto frame = encode_chunk(symbols, *enc);
            ++trials;
            try {
                detected += decode_chunk(frame, *dec) != symbols;
            } catch (const CodecError&) {
                ++detected;
            }
        }
        CHECK(detected == trials);
    }

    TEST_CASE("corrupted frames raise codec errors rather than crashing") {
        std::mt19937_64 rng(8);
        auto model = make_model("adaptive:1");
        const auto symbols = skewed_symbols(rng, 3000);
        const auto frame = encode_chunk(symbols, *model);
        for (int trial = 0; trial < 100; ++trial) {
            auto bad = frame;
            bad.payload[rng() % bad.payload.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
            try {
                (void)decode_chunk(bad, *model);
            } catch (const CodecError&) {
            }
        }
        auto shorter = frame;
        shorter.bit_length -= 9;
        shorter.payload.resize((shorter.bit_length + 7) / 8);
        CHECK_THROWS_AS(decode_chunk(shorter, *model), CodecError);
    }

    TEST_CASE("register width and precision configurations") {
        std::mt19937_64 rng(9);
        const CoderConfig configs[] = {{32, 16}, {32, 30}, {24, 12}, {16, 8}, {12, 8}, {32, 10}};
        for (const auto& config : configs) {
            for (int trial = 0; trial < 10; ++trial) {
                const std::size_t alphabet = config.precision >= 8 ? 256 : 16;
                auto model = std::make_unique<AdaptiveModel>(alphabet, trial % 3, 1.0);
                const auto symbols = random_symbols(rng, 1 + rng() % 3000, alphabet / (1 + trial % 4));
                CodingStats stats;
                const auto frame = encode_chunk(symbols, *model, config, &stats);
                CHECK(decode_chunk(frame, *model, config) == symbols);
                CHECK(frame.bit_length <= std::ceil(stats.ideal_bits) + 8);
            }
        }
        CHECK_THROWS_AS(CoderConfig({32, 31}).validate(), InvalidArgument);
        CHECK_THROWS_AS(CoderConfig({33, 16}).validate(), InvalidArgument);
        CHECK_THROWS_AS(CoderConfig({3, 1}).validate(), InvalidArgument);
    }

    TEST_CASE("length bound property over random tables") {
        std::mt19937_64 rng(10);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 1 + rng() % 2000;
            const std::size_t alphabet = 2 + rng() % 300;
            std::vector<QuantizedPmf> rows;
            std::vector<Symbol> symbols;
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> p(alphabet);
                double sum = 0;
                for (auto& v : p) sum += (v = std::pow(static_cast<double>(rng() % 1000 + 1), 3));
                for (auto& v : p) v /= sum;
                rows.push_back(quantize_pmf(p, 16));
                // Draw roughly from the table so both likely and unlikely symbols appear.
                const std::uint32_t target = static_cast<std::uint32_t>(rng() % 65536);
                symbols.push_back(rng() % 10 ? rows.back().find(target) : static_cast<Symbol>(rng() % alphabet));
            }
            ReplayPmfSource source(rows);
            CodingStats stats;
            const auto frame = encode_symbols(symbols, source, {}, &stats);
            CHECK(frame.bit_length <= std::ceil(stats.ideal_bits) + 8);
            ReplayPmfSource replay(rows);
            CHECK(decode_symbols(frame, replay, {}) == symbols);
        }
    }

    TEST_CASE("invalid encode inputs") {
        UniformModel model(4);
        CHECK_THROWS_AS(encode_chunk(std::vector<Symbol>{}, model), InvalidArgument);
        CHECK_THROWS_AS(encode_chunk(std::vector<Symbol>{1, 7}, model), InvalidArgument);
        ChunkFrame empty;
        CHECK_THROWS_AS(decode_chunk(empty, model), FormatError);
    }
}
