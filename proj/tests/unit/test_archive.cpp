#include "doctest.h"
#include "test_support.hpp"

#include "modelzip/archive.hpp"
#include "modelzip/error.hpp"
#include "modelzip/model.hpp"
#include "modelzip/model_registry.hpp"

#include <vector>

using namespace modelzip;
using modelzip::test::random_bytes;

TEST_SUITE("archive") {
    TEST_CASE("5000 symbols at C=2048 form chunks of 2048, 2048 and 904") {
        UniformModel model;
        const auto bytes = random_bytes(5000, 1);
        const std::vector<Symbol> symbols(bytes.begin(), bytes.end());
        const auto archive = encode_stream(symbols, model, 2048);
        REQUIRE(archive.chunks.size() == 3);
        CHECK(archive.chunks[0].symbol_count == 2048);
        CHECK(archive.chunks[1].symbol_count == 2048);
        CHECK(archive.chunks[2].symbol_count == 904);
        CHECK(archive.symbol_count() == 5000);
        CHECK(decode_stream(archive, model) == symbols);
    }

    TEST_CASE("one full chunk equals a single encode_chunk plus header") {
        auto model = make_model("adaptive:1");
        const auto bytes = random_bytes(2048, 2);
        const std::vector<Symbol> symbols(bytes.begin(), bytes.end());
        const auto archive = encode_stream(symbols, *model, 2048);
        REQUIRE(archive.chunks.size() == 1);
        const auto frame = encode_chunk(symbols, *model);
        CHECK(archive.chunks[0] == frame);

        const auto serialized = serialize_archive(archive);
        const std::size_t header = 4 + 1 + 1 + 1 + 4 + 2 + archive.model_id.size() + 4;
        CHECK(serialized.size() == header + 8 + frame.payload.size());
        CHECK(std::vector<std::uint8_t>(serialized.end() - static_cast<std::ptrdiff_t>(frame.payload.size()),
                                        serialized.end()) == frame.payload);
    }

    TEST_CASE("header layout is little-endian and versioned") {
        UniformModel model;
        const auto archive = encode_stream(std::vector<Symbol>{1, 2, 3}, model, 16);
        const auto bytes = serialize_archive(archive);
        CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MZP1");
        CHECK(bytes[4] == Archive::kVersion);
        CHECK(bytes[5] == 32);
        CHECK(bytes[6] == 16);
        CHECK(bytes[7] == 0x00);  // alphabet 256 = 00 01 00 00
        CHECK(bytes[8] == 0x01);
        CHECK(bytes[11] == 7);  // "uniform"
        CHECK(bytes[12] == 0);
        CHECK(std::string(bytes.begin() + 13, bytes.begin() + 20) == "uniform");
        CHECK(parse_archive(bytes) == archive);
    }

    TEST_CASE("uniform archive of 1 MiB has rate 1 within 0.1%") {
        UniformModel model;
        const auto bytes = random_bytes(1 << 20, 3);
        const std::vector<Symbol> symbols(bytes.begin(), bytes.end());
        const auto archive = encode_stream(symbols, model, 2048);
        const double rate = static_cast<double>(archive.payload_bytes()) / static_cast<double>(bytes.size());
        CHECK(rate >= 1.0);
        CHECK(rate <= 1.001);
        CHECK(decode_stream(parse_archive(serialize_archive(archive)), model) == symbols);
    }

    TEST_CASE("malformed archives are rejected") {
        UniformModel model;
        const auto good = serialize_archive(encode_stream(std::vector<Symbol>{5, 6, 7, 8}, model, 2));
        auto bad_magic = good;
        bad_magic[0] = 'X';
        CHECK_THROWS_AS(parse_archive(bad_magic), FormatError);
        auto bad_version = good;
        bad_version[4] = 9;
        CHECK_THROWS_AS(parse_archive(bad_version), FormatError);
        auto bad_precision = good;
        bad_precision[6] = 31;
        CHECK_THROWS_AS(parse_archive(bad_precision), FormatError);
        for (std::size_t cut = 0; cut < good.size(); ++cut)
            CHECK_THROWS_AS(parse_archive(std::span(good).first(cut)), FormatError);
        auto trailing = good;
        trailing.push_back(0);
        CHECK_THROWS_AS(parse_archive(trailing), FormatError);
    }

    TEST_CASE("stream errors carry the chunk index") {
        auto model = make_model("adaptive:0");
        const auto bytes = random_bytes(5000, 4);
        const std::vector<Symbol> symbols(bytes.begin(), bytes.end());
        auto archive = encode_stream(symbols, *model, 1000);
        archive.chunks[3].payload.pop_back();
        try {
            decode_stream(archive, *model);
            FAIL("expected a codec error");
        } catch (const CodecError& e) {
            CHECK(e.chunk_index() == 3);
            CHECK(e.symbol_index().has_value());
        }
        UniformModel small(16);
        CHECK_THROWS_AS(decode_stream(archive, small), InvalidArgument);
        CHECK_THROWS_AS(encode_stream(symbols, *model, 0), InvalidArgument);
    }

    TEST_CASE("empty input gives an empty archive") {
        UniformModel model;
        const auto archive = encode_stream(std::vector<Symbol>{}, model, 2048);
        CHECK(archive.chunks.empty());
        CHECK(decode_stream(parse_archive(serialize_archive(archive)), model).empty());
    }
}
