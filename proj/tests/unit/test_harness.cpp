#include "doctest.h"
#include "test_support.hpp"

#include "modelzip/bridge/bridge_scorer.hpp"
#include "modelzip/bridge/session.hpp"
#include "modelzip/error.hpp"
#include "modelzip/harness.hpp"
#include "modelzip/io.hpp"
#include "modelzip/model_registry.hpp"
#include "modelzip/ngram.hpp"
#include "modelzip/oracle/rational_coder.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

using namespace modelzip;
using modelzip::test::TempDir;
using boost::multiprecision::cpp_rational;

namespace {

Document text_doc(const std::string& id, const std::string& text) {
    return {id, Modality::text, {}, {text.begin(), text.end()}};
}

Document bytes_doc(const std::string& id, std::vector<std::uint8_t> bytes) {
    return {id, Modality::bytes, {}, std::move(bytes)};
}

std::string wiki_text(std::size_t at, std::size_t n) {
    const auto& w = modelzip::test::wiki_sample();
    // Trim to whole UTF-8 characters.
    while (at > 0 && (w[at] & 0xC0) == 0x80) ++at;
    std::size_t end = at + n;
    while (end < w.size() && (w[end] & 0xC0) == 0x80) ++end;
    return {w.begin() + static_cast<std::ptrdiff_t>(at), w.begin() + static_cast<std::ptrdiff_t>(end)};
}

// Exact probability of each byte of `text` under a Laplace byte n-gram of
// order k trained on `training`, by brute-force substring counting with
// backoff to the longest context that occurs (followed by a byte) in training.
std::vector<cpp_rational> ngram_oracle(const std::string& training, const std::string& text, std::size_t k) {
    std::vector<cpp_rational> out;
    for (std::size_t pos = 0; pos < text.size(); ++pos) {
        for (std::size_t j = std::min(k, pos) + 1; j-- > 0;) {
            const std::string ctx = text.substr(pos - j, j);
            long n = 0, c = 0;
            for (std::size_t t = j; t < training.size(); ++t) {
                if (training.compare(t - j, j, ctx) != 0) continue;
                ++n;
                c += training[t] == text[pos];
            }
            if (n > 0 || j == 0) {
                out.emplace_back(c + 1, n + 256);
                break;
            }
        }
    }
    return out;
}

// Scorer that fails on its second window.
class FailingScorer final : public Scorer {
public:
    [[nodiscard]] std::string name() const override { return "failing"; }
    [[nodiscard]] std::unique_ptr<Scorer> fork() const override { return std::make_unique<FailingScorer>(); }
    std::vector<Symbol> symbols(const Document& doc, Domain) override { return {doc.bytes.begin(), doc.bytes.end()}; }
    std::vector<double> score_window(std::span<const Symbol> window, std::size_t score_begin) override {
        if (++calls_ == 2) throw ContextOverflow("window too long for the backend");
        return std::vector<double>(window.size() - score_begin, -8.0);
    }
    ChunkFrame code_window(std::span<const Symbol>, std::size_t, const CoderConfig&) override { return {}; }

private:
    int calls_ = 0;
};

}  // namespace

TEST_SUITE("harness") {
    TEST_CASE("chunked windows") {
        EvalConfig c;
        c.context = 2048;
        const auto w = make_windows(4096, c);
        CHECK(w == std::vector<Window>{{0, 2048, 0}, {2048, 4096, 2048}});
        CHECK(make_windows(100, c) == std::vector<Window>{{0, 100, 0}});
        CHECK(make_windows(0, c).empty());
    }

    TEST_CASE("sliding windows with step 512") {
        EvalConfig c;
        c.context = 2048;
        c.mode = EvalMode::sliding;
        c.step = 512;
        const auto w = make_windows(3072, c);
        CHECK(w == std::vector<Window>{{0, 2048, 0}, {512, 2560, 2048}, {1024, 3072, 2560}});
        for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i].score_begin - w[i].begin == 1536);
        // A short tail is scored from a full-length window start.
        CHECK(make_windows(2100, c) == std::vector<Window>{{0, 2048, 0}, {512, 2100, 2048}});
    }

    TEST_CASE("sliding with S = C gives the chunked window list") {
        std::mt19937_64 rng(1);
        for (int i = 0; i < 200; ++i) {
            EvalConfig chunked;
            chunked.context = 1 + rng() % 300;
            EvalConfig sliding = chunked;
            sliding.mode = EvalMode::sliding;
            sliding.step = chunked.context;
            const std::size_t n = rng() % 2000;
            CHECK(make_windows(n, chunked) == make_windows(n, sliding));
        }
    }

    TEST_CASE("coverage: every position is scored exactly once") {
        std::mt19937_64 rng(2);
        for (int i = 0; i < 500; ++i) {
            EvalConfig c;
            c.context = 1 + rng() % 200;
            c.mode = i % 2 ? EvalMode::sliding : EvalMode::chunked;
            c.step = 1 + rng() % c.context;
            const std::size_t n = rng() % 1500;
            std::vector<int> hits(n, 0);
            for (const auto& w : make_windows(n, c)) {
                CHECK(w.begin <= w.score_begin);
                CHECK(w.score_begin < w.end);
                CHECK(w.end - w.begin <= c.context);
                for (std::size_t p = w.score_begin; p < w.end; ++p) ++hits[p];
            }
            for (int h : hits) CHECK(h == 1);
        }
    }

    TEST_CASE("config validation") {
        EvalConfig c;
        c.context = 0;
        CHECK_THROWS_AS(c.validate(), InvalidArgument);
        c.context = 16;
        c.mode = EvalMode::sliding;
        c.step = 17;
        CHECK_THROWS_AS(c.validate(), InvalidArgument);
        c.step = 0;
        CHECK_THROWS_AS(c.validate(), InvalidArgument);
        c.step = 16;
        CHECK_NOTHROW(c.validate());
        CHECK(parse_eval_mode("sliding") == EvalMode::sliding);
        CHECK(parse_domain("bytes") == Domain::bytes);
        CHECK_THROWS_AS(parse_eval_mode("window"), InvalidArgument);
        CHECK_THROWS_AS(parse_domain("chars"), InvalidArgument);
    }

    TEST_CASE("total bits") {
        CHECK(total_bits(std::vector<double>(100, -8.0)) == 800.0);
        CHECK(total_bits(std::vector<double>{}) == 0.0);
        CHECK_THROWS_AS(total_bits(std::vector<double>{-1.0, 0.5}), InvalidArgument);
        CHECK_THROWS_AS(total_bits(std::vector<double>{-std::numeric_limits<double>::infinity()}), InvalidArgument);
        CHECK_THROWS_AS(total_bits(std::vector<double>{std::nan("")}), InvalidArgument);
    }

    TEST_CASE("total bits from the mock n-gram sidecar equals the exact product") {
        const std::string training = wiki_text(0, 20000);
        const std::string chunk = wiki_text(500000, 2000);
        TempDir dir("harness-ngram");
        modelzip::test::write_text(dir.path() / "train.txt", training);
        auto session = bridge::Session::open("mock:ngram:2:" + (dir.path() / "train.txt").string());
        bridge::EvalRequest request;
        request.tokens = session->tokenize(chunk);
        REQUIRE(request.tokens.size() == chunk.size());
        const auto reply = session->evaluate(request);
        const double L = total_bits(reply.log2_probs);

        cpp_rational product = 1;
        for (const auto& p : ngram_oracle(training, chunk, 2)) product *= p;
        const double exact = oracle::neg_log2(product);
        CHECK(std::abs(L - exact) <= 1e-9 * exact);
    }

    TEST_CASE("reports satisfy the metric identity") {
        std::mt19937_64 rng(3);
        for (int i = 0; i < 200; ++i) {
            const double L = static_cast<double>(rng() % 10000000) / 7.0 + 1.0;
            const std::size_t tokens = 1 + rng() % 100000, chars = 1 + rng() % 100000, bytes = 1 + rng() % 100000;
            const auto r = make_report(L, tokens, chars, bytes);
            CHECK(std::abs(r.bpt * static_cast<double>(tokens) - L) <= 1e-9 * L);
            CHECK(std::abs(r.bpc * static_cast<double>(chars) - L) <= 1e-9 * L);
            CHECK(std::abs(r.bpb * static_cast<double>(bytes) - L) <= 1e-9 * L);
            CHECK(r.rate == doctest::Approx(L / (8.0 * static_cast<double>(bytes))));
        }
        CHECK(make_report(80.0, 10, 10, 10, std::size_t{12}).rate == doctest::Approx(1.2));
        CHECK_THROWS_AS(make_report(1.0, 0, 1, 1), InvalidArgument);
        CHECK_THROWS_AS(make_report(1.0, 1, 1, 0), InvalidArgument);
    }

    TEST_CASE("aggregation sums counts and keeps payloads only when complete") {
        const auto a = make_report(100.0, 10, 20, 30, std::size_t{5});
        const auto b = make_report(50.0, 5, 10, 10, std::size_t{3});
        const auto both = aggregate(std::vector<MetricsReport>{a, b});
        CHECK(both.total_bits == 150.0);
        CHECK(both.n_bytes == 40);
        CHECK(both.payload_bytes == std::size_t{8});
        CHECK(both.rate == doctest::Approx(8.0 / 40.0));
        const auto partial = aggregate(std::vector<MetricsReport>{a, make_report(50.0, 5, 10, 10)});
        CHECK_FALSE(partial.payload_bytes.has_value());
        CHECK(partial.rate == doctest::Approx(150.0 / 320.0));
        CHECK_THROWS_AS(aggregate(std::vector<MetricsReport>{}), InvalidArgument);
    }

    TEST_CASE("uniform model on 1 MiB random bytes") {
        ModelScorer scorer(make_model("uniform"));
        EvalConfig c;
        c.physical = true;
        const auto out = evaluate_document(bytes_doc("r", modelzip::test::random_bytes(1 << 20, 4)), scorer, c);
        REQUIRE(out.report.has_value());
        CHECK(out.report->bpb == 8.0);
        CHECK(out.report->rate >= 1.0);
        CHECK(out.report->rate <= 1.001);
    }

    TEST_CASE("ASCII text has bpc equal to bpb; multibyte text counts scalar values") {
        ModelScorer scorer(make_model("adaptive"));
        const auto ascii = evaluate_document(text_doc("a", "plain ascii text, nothing else"), scorer, {});
        CHECK(ascii.report->n_chars == ascii.report->n_bytes);
        CHECK(ascii.report->bpc == ascii.report->bpb);
        const auto utf8 = evaluate_document(text_doc("u", "na\xc3\xafve \xe2\x82\xac"), scorer, {});
        CHECK(utf8.report->n_bytes == 10);
        CHECK(utf8.report->n_chars == 7);
    }

    TEST_CASE("sliding with S = C reproduces chunked L exactly") {
        std::mt19937_64 rng(5);
        for (const char* spec : {"adaptive:2", "kt:1", "uniform"}) {
            for (int d = 0; d < 5; ++d) {
                const auto doc = text_doc("d", wiki_text(rng() % 1000000, 1000 + rng() % 9000));
                ModelScorer a(make_model(spec)), b(make_model(spec));
                EvalConfig chunked;
                chunked.context = 1024;
                EvalConfig sliding = chunked;
                sliding.mode = EvalMode::sliding;
                sliding.step = 1024;
                CHECK(evaluate_document(doc, a, chunked).report->total_bits ==
                      evaluate_document(doc, b, sliding).report->total_bits);
            }
        }
    }

    TEST_CASE("sliding scores every token once with more context") {
        ModelScorer scorer(make_model("adaptive:1"));
        EvalConfig c;
        c.context = 512;
        c.mode = EvalMode::sliding;
        c.step = 128;
        const auto doc = text_doc("d", wiki_text(12345, 3000));
        const auto out = evaluate_document(doc, scorer, c);
        CHECK(out.report->n_tokens == doc.bytes.size());
    }

    TEST_CASE("physical payload tracks the theoretical rate under the mock n-gram sidecar") {
        TempDir dir("harness-physical");
        modelzip::test::write_text(dir.path() / "train.txt", wiki_text(0, 200000));
        bridge::BridgeScorer scorer("mock:ngram:2:" + (dir.path() / "train.txt").string());
        EvalConfig c;
        c.physical = true;
        const auto doc = text_doc("w", wiki_text(700000, 30000));
        const auto out = evaluate_document(doc, scorer, c);
        REQUIRE(out.report.has_value());
        const double theoretical = out.report->total_bits / (8.0 * static_cast<double>(out.report->n_bytes));
        CHECK(out.report->payload_bytes.has_value());
        CHECK(out.report->rate >= theoretical);
        CHECK((out.report->rate - theoretical) / theoretical < 0.005);
    }

    TEST_CASE("physical bits stay within the per-chunk bound of the quantized length") {
        ModelScorer scorer(make_model("adaptive:2"));
        const auto symbols = modelzip::test::as_symbols(wiki_text(300000, 20000));
        EvalConfig c;
        c.context = 2048;
        for (const auto& w : make_windows(symbols.size(), c)) {
            const auto window = std::span(symbols).subspan(w.begin, w.end - w.begin);
            auto model = make_model("adaptive:2");
            CodingStats stats;
            const auto expected = encode_chunk(window, *model, {}, &stats);
            const auto frame = scorer.code_window(window, 0, {});
            CHECK(frame == expected);
            CHECK(static_cast<double>(frame.bit_length) >= std::floor(stats.ideal_bits));
            CHECK(static_cast<double>(frame.bit_length) <= std::ceil(stats.ideal_bits) + 8);
        }
    }

    TEST_CASE("errors are tagged with the document id") {
        FailingScorer scorer;
        EvalConfig c;
        c.context = 16;
        try {
            evaluate_document(bytes_doc("doc-7", std::vector<std::uint8_t>(100, 1)), scorer, c);
            FAIL("expected an error");
        } catch (const DocumentError& e) {
            CHECK(e.doc_id() == "doc-7");
            CHECK(std::string(e.name()) == "context_overflow");
            CHECK(std::string(e.what()).find("doc-7") != std::string::npos);
        }
        ModelScorer model_scorer(make_model("adaptive"));
        CHECK_THROWS_AS(evaluate_document(text_doc("empty", ""), model_scorer, c), DocumentError);
        CHECK_THROWS_AS(ModelScorer(make_model("uniform:16")), InvalidArgument);
    }

    TEST_CASE("tokenization mismatches skip the document") {
        bridge::BridgeScorer scorer("mock:uniform,lossy");
        const auto out = evaluate_document(text_doc("caf\xc3\xa9.txt", "caf\xc3\xa9"), scorer, {});
        CHECK_FALSE(out.report.has_value());
        CHECK(out.skip_reason.find("byte") != std::string::npos);
        const auto fine = evaluate_document(text_doc("ascii.txt", "cafe"), scorer, {});
        CHECK(fine.report.has_value());
    }

    TEST_CASE("byte domain over a text document") {
        ModelScorer scorer(make_model("uniform"));
        EvalConfig c;
        c.domain = Domain::bytes;
        const auto out = evaluate_document(text_doc("t", "hello"), scorer, c);
        CHECK(out.report->n_tokens == 5);
        CHECK(out.report->bpb == 8.0);
    }
}
