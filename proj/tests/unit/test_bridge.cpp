#include "doctest.h"
#include "test_support.hpp"

#include "modelzip/arithmetic_coder.hpp"
#include "modelzip/bridge/base64.hpp"
#include "modelzip/bridge/bridge_scorer.hpp"
#include "modelzip/bridge/conformance.hpp"
#include "modelzip/bridge/mock_sidecar.hpp"
#include "modelzip/bridge/protocol.hpp"
#include "modelzip/bridge/session.hpp"
#include "modelzip/bridge/transport.hpp"
#include "modelzip/corpus.hpp"
#include "modelzip/error.hpp"
#include "modelzip/model_registry.hpp"

#include <chrono>
#include <csignal>
#include <filesystem>
#include <random>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>
#include <vector>

using namespace modelzip;
using namespace modelzip::bridge;
using modelzip::test::as_symbols;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

// Random valid UTF-8: ASCII, two-, three- and four-byte sequences.
std::string random_utf8(std::mt19937_64& rng, std::size_t code_points) {
    std::string out;
    for (std::size_t i = 0; i < code_points; ++i) {
        std::uint32_t cp;
        switch (rng() % 4) {
        case 0: cp = 0x20 + rng() % 0x5F; break;
        case 1: cp = 0x80 + rng() % (0x800 - 0x80); break;
        case 2:
            cp = 0x800 + rng() % (0x10000 - 0x800);
            if (cp >= 0xD800 && cp < 0xE000) cp = 0xE000;
            break;
        default: cp = 0x10000 + rng() % (0x110000 - 0x10000); break;
        }
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }
    return out;
}

// Mock sidecar binary serving a Unix socket for the lifetime of the object.
class SocketServer {
public:
    SocketServer(const std::filesystem::path& socket, const std::string& spec) : socket_(socket) {
        pid_ = ::fork();
        REQUIRE(pid_ >= 0);
        if (pid_ == 0) {
            const std::string listen = "unix:" + socket.string();
            ::execl(MODELZIP_MOCK_SIDECAR_BIN, MODELZIP_MOCK_SIDECAR_BIN, spec.c_str(), "--listen", listen.c_str(),
                    static_cast<char*>(nullptr));
            ::_exit(127);
        }
        for (int i = 0; i < 500 && !std::filesystem::exists(socket); ++i)
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ~SocketServer() {
        ::kill(pid_, SIGTERM);
        ::waitpid(pid_, nullptr, 0);
    }
    SocketServer(const SocketServer&) = delete;
    SocketServer& operator=(const SocketServer&) = delete;

private:
    std::filesystem::path socket_;
    pid_t pid_ = -1;
};

}  // namespace

TEST_SUITE("bridge") {
    TEST_CASE("base64 matches the RFC 4648 vectors") {
        const std::vector<std::pair<std::string, std::string>> vectors{
            {"", ""},         {"f", "Zg=="},        {"fo", "Zm8="},        {"foo", "Zm9v"},
            {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"}};
        for (const auto& [plain, encoded] : vectors) {
            CHECK(base64_encode(bytes_of(plain)) == encoded);
            CHECK(base64_decode(encoded) == bytes_of(plain));
        }
        const auto all = modelzip::test::random_bytes(1000, 9);
        CHECK(base64_decode(base64_encode(all)) == all);
        CHECK_THROWS_AS(base64_decode("Zm9"), ProtocolError);
        CHECK_THROWS_AS(base64_decode("Zm9*"), ProtocolError);
        CHECK_THROWS_AS(base64_decode("Z==="), ProtocolError);
    }

    TEST_CASE("pmf rows travel as little-endian u16") {
        const auto pmf = quantize_pmf(std::vector<double>{0.5, 0.25, 0.25}, 16);
        const auto row = encode_pmf_row(pmf);
        CHECK(base64_decode(row) == std::vector<std::uint8_t>{0x00, 0x80, 0x00, 0x40, 0x00, 0x40});
        CHECK(decode_pmf_row(row, 3, 16) == pmf);
        CHECK_THROWS_AS(decode_pmf_row(row, 4, 16), ProtocolError);
    }

    TEST_CASE("mock handshake advertises its session") {
        auto session = Session::open("mock:uniform");
        CHECK(session->info().vocab_size == 256);
        CHECK(session->info().context_limit == 4096);
        CHECK(session->info().bos_policy == BosPolicy::none);
        REQUIRE(session->info().byte_token_map.has_value());

        auto big = Session::open("mock:uniform,vocab=32000,offset=3,context=100,bos");
        CHECK(big->info().vocab_size == 32000);
        CHECK(big->info().max_chunk_tokens() == 99);
        CHECK(big->info().byte_token_map->token(0) == 3);
        CHECK(!Session::open("mock:uniform,no-byte-map")->info().byte_token_map.has_value());
    }

    TEST_CASE("malformed hello_ack names the offending field") {
        SessionInfo info;
        info.model_name = "m";
        info.vocab_size = 256;
        info.context_limit = 10;
        auto ack = make_hello_ack(1, info);
        CHECK(parse_hello_ack(ack) == info);
        for (const char* field : {"vocab_size", "context_limit", "bos_policy", "byte_token_map", "model_name"}) {
            auto bad = ack;
            bad[field] = field == std::string("model_name") ? Message(7) : Message("x");
            try {
                parse_hello_ack(bad);
                FAIL("expected a protocol error for " << field);
            } catch (const ProtocolError& e) {
                CHECK(std::string(e.what()).find(field) != std::string::npos);
            }
        }
        auto wrong = ack;
        wrong["protocol"] = 2;
        CHECK_THROWS_AS(parse_hello_ack(wrong), ProtocolError);
        CHECK_THROWS_AS(parse_message("{\"type\": \"tokenize\"}"), ProtocolError);
        CHECK_THROWS_AS(parse_message("not json"), ProtocolError);
    }

    TEST_CASE("tokenize and detokenize") {
        auto session = Session::open("mock:uniform");
        CHECK(session->tokenize("").empty());
        CHECK(session->tokenize("AB") == std::vector<Symbol>{65, 66});
        std::mt19937_64 rng(4);
        for (int i = 0; i < 100; ++i) {
            const auto text = random_utf8(rng, rng() % 40);
            const auto ids = session->tokenize(text);
            CHECK(ids.size() == text.size());
            CHECK(session->detokenize(ids) == text);
        }
        auto offset = Session::open("mock:uniform,vocab=1000,offset=7");
        CHECK(offset->tokenize("AB") == std::vector<Symbol>{72, 73});
        CHECK(offset->detokenize(std::vector<Symbol>{72, 73}) == "AB");
    }

    TEST_CASE("uniform mock scores every byte at -8") {
        auto session = Session::open("mock:uniform");
        EvalRequest r;
        r.tokens = session->tokenize("hello");
        const auto reply = session->evaluate(r);
        REQUIRE(reply.log2_probs.size() == 5);
        for (double v : reply.log2_probs) CHECK(v == -8.0);
    }

    TEST_CASE("mock metrics match the in-process model") {
        const auto text = std::string(reinterpret_cast<const char*>(modelzip::test::wiki_sample().data()), 3000);
        for (const char* kind : {"adaptive:1", "kt:2", "adaptive:0"}) {
            auto session = Session::open(std::string("mock:") + kind);
            EvalRequest r;
            r.tokens = as_symbols(text);
            r.score_from = 100;
            const auto reply = session->evaluate(r);
            REQUIRE(reply.log2_probs.size() == r.tokens.size() - 100);
            auto model = make_model(kind);
            model->reset();
            for (std::size_t i = 0; i < r.tokens.size(); ++i) {
                if (i >= 100) CHECK(reply.log2_probs[i - 100] == doctest::Approx(model->log2_prob(r.tokens[i])).epsilon(1e-9));
                model->update(r.tokens[i]);
            }
        }
    }

    TEST_CASE("codec replies drive the coder to the in-process frame") {
        BridgeScorer scorer("mock:adaptive:1");
        const auto symbols = as_symbols(std::string("the quick brown fox jumps over the lazy dog, twice: ") +
                                        "the quick brown fox jumps over the lazy dog");
        const auto frame = scorer.code_window(symbols, 0, {});
        auto model = make_model("adaptive:1");
        CHECK(frame == encode_chunk(symbols, *model));
        CHECK(decode_chunk(frame, *model) == symbols);
    }

    TEST_CASE("replies are deterministic across sessions") {
        EvalRequest r;
        r.tokens = as_symbols(std::string("determinism"));
        r.mode = OutputMode::codec;
        auto a = Session::open("mock:adaptive:2")->evaluate(r);
        auto b = Session::open("mock:adaptive:2")->evaluate(r);
        CHECK(a.pmfs == b.pmfs);
        CHECK(record_transcript("mock:kt:1") == record_transcript("mock:kt:1"));
    }

    TEST_CASE("session-side checks") {
        auto session = Session::open("mock:uniform,no-byte-map");
        EvalRequest bytes;
        bytes.tokens = {1, 2, 3};
        bytes.alphabet = Alphabet::bytes;
        CHECK_THROWS(session->evaluate(bytes));

        auto small = Session::open("mock:uniform,context=8,bos");
        EvalRequest fits;
        fits.tokens = std::vector<Symbol>(7, 65);
        CHECK(small->evaluate(fits).bos_policy == BosPolicy::prepend_per_chunk);
        EvalRequest over;
        over.tokens = std::vector<Symbol>(8, 65);
        CHECK_THROWS_AS(small->evaluate(over), ContextOverflow);

        small->close();
        small->close();
        CHECK_THROWS(small->tokenize("x"));
    }

    TEST_CASE("the mock answers bad requests with error replies") {
        MockSidecar mock(parse_mock_config("uniform,context=4"));
        auto reply = parse_message(mock.handle(to_line(make_tokenize(1, "x"))));
        CHECK(message_type(reply) == "error");  // no hello yet
        reply = parse_message(mock.handle(to_line(make_hello(2, 2))));
        CHECK(reply["code"] == "version_mismatch");
        reply = parse_message(mock.handle(to_line(make_hello(3))));
        CHECK(message_type(reply) == "hello_ack");
        reply = parse_message(mock.handle("{broken"));
        CHECK(reply["code"] == "bad_request");
        EvalRequest over;
        over.tokens = std::vector<Symbol>(5, 1);
        reply = parse_message(mock.handle(to_line(make_eval(4, over))));
        CHECK(reply["code"] == "context_overflow");
        CHECK(message_seq(reply) == 4);
        reply = parse_message(mock.handle(to_line(make_tokenize(4, "x"))));
        CHECK(reply["code"] == "bad_request");  // seq must increase
        mock.handle(to_line(make_bye(5)));
        CHECK(mock.finished());
    }

    TEST_CASE("subprocess and unix-socket transports") {
        const std::string exec = std::string("exec:") + MODELZIP_MOCK_SIDECAR_BIN + " adaptive:1";
        auto session = Session::open(exec);
        CHECK(session->tokenize("AB") == std::vector<Symbol>{65, 66});
        CHECK(record_transcript(exec) == record_transcript("mock:adaptive:1"));

        modelzip::test::TempDir dir("bridge-sock");
        const auto socket = dir.path() / "s.sock";
        SocketServer server(socket, "kt:1");
        const std::string endpoint = "unix:" + socket.string();
        CHECK(record_transcript(endpoint) == record_transcript("mock:kt:1"));
        const auto report = run_conformance(endpoint);
        for (const auto& c : report.checks)
            if (!c.passed) FAIL_CHECK(c.name << ": " << c.detail);
        CHECK_THROWS_AS(connect("unix:" + (dir.path() / "absent.sock").string()), TransportError);
        CHECK_THROWS(connect("carrier-pigeon:x"));
    }

    TEST_CASE("byte documents use the advertised byte tokens") {
        BridgeScorer scorer("mock:adaptive:1,vocab=1000,offset=5");
        Document doc;
        doc.doc_id = "b";
        doc.modality = Modality::bytes;
        doc.bytes = {0, 1, 255};
        const auto symbols = scorer.symbols(doc, Domain::bytes);
        CHECK(symbols == std::vector<Symbol>{0, 1, 255});
        const auto scores = scorer.score_window(symbols, 0);
        REQUIRE(scores.size() == 3);
        // Byte restriction renormalizes over the 256 byte tokens.
        CHECK(scores[0] == doctest::Approx(-8.0));
        BridgeScorer no_map("mock:uniform,no-byte-map");
        CHECK_THROWS(no_map.symbols(doc, Domain::bytes));
    }
}
