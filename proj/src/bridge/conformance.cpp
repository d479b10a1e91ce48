#include "modelzip/bridge/conformance.hpp"

#include "modelzip/arithmetic_coder.hpp"
#include "modelzip/bridge/session.hpp"
#include "modelzip/bridge/transport.hpp"
#include "modelzip/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace modelzip::bridge {

namespace {

constexpr const char* kProbeText =
    "The quick brown fox jumps over the lazy dog. Pack my box with five dozen liquor jugs! 0123456789";

struct CheckFailed {
    std::string detail;
};

void expect(bool ok, const std::string& detail) {
    if (!ok) throw CheckFailed{detail};
}

Message raw_exchange(Transport& t, const Message& m) {
    t.send_line(to_line(m));
    return parse_message(t.receive_line());
}

void expect_error(const Message& reply, std::uint64_t seq, ErrorCode code) {
    expect(message_type(reply) == "error", "expected an error reply, got " + message_type(reply));
    expect(message_seq(reply) == seq, "error reply does not echo seq " + std::to_string(seq));
    const auto got = reply.value("code", std::string());
    expect(got == to_string(code), "expected error code " + std::string(to_string(code)) + ", got '" + got + "'");
    expect(reply.contains("message") && reply["message"].is_string(), "error reply lacks a message string");
}

Message strip_seq(Message m) {
    m.erase("seq");
    return m;
}

std::vector<Symbol> probe_tokens(Session& s, std::size_t max_len) {
    auto ids = s.tokenize(kProbeText);
    if (ids.size() > max_len) ids.resize(max_len);
    return ids;
}

}  // namespace

bool ConformanceReport::passed() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

ConformanceReport run_conformance(const std::string& endpoint) {
    ConformanceReport report;
    report.endpoint = endpoint;
    auto run = [&](const std::string& name, const std::function<std::string()>& body) {
        ConformanceCheck c{name, false, {}};
        try {
            c.detail = body();
            c.passed = true;
        } catch (const CheckFailed& f) {
            c.detail = f.detail;
        } catch (const std::exception& e) {
            c.detail = std::string("exception: ") + e.what();
        }
        report.checks.push_back(std::move(c));
    };

    std::unique_ptr<Session> session;
    run("handshake", [&] {
        session = Session::open(endpoint);
        const auto& info = session->info();
        return info.model_name + ", vocab " + std::to_string(info.vocab_size) + ", context " +
               std::to_string(info.context_limit) + ", bos_policy " + std::string(to_string(info.bos_policy)) +
               (info.byte_token_map ? ", byte map" : ", no byte map");
    });
    if (!session) return report;
    const SessionInfo info = session->info();
    const std::size_t probe_len = std::min<std::size_t>(64, info.max_chunk_tokens());

    run("version_mismatch_rejected", [&] {
        auto t = connect(endpoint);
        expect_error(raw_exchange(*t, make_hello(1, kProtocolVersion + 1)), 1, ErrorCode::version_mismatch);
        return std::string();
    });

    run("hello_required_first", [&] {
        auto t = connect(endpoint);
        expect_error(raw_exchange(*t, make_tokenize(1, "x")), 1, ErrorCode::bad_request);
        return std::string();
    });

    run("seq_echo", [&] {
        const auto reply = session->exchange(make_tokenize(1000, "seq"));
        expect(message_type(reply) == "tokenize", "expected a tokenize reply, got " + message_type(reply));
        expect(message_seq(reply) == 1000, "reply seq " + std::to_string(message_seq(reply)) + " != 1000");
        return std::string();
    });

    run("seq_must_increase", [&] {
        expect_error(session->exchange(make_tokenize(5, "stale")), 5, ErrorCode::bad_request);
        return std::string();
    });

    run("tokenize_empty", [&] {
        const auto ids = session->tokenize("");
        expect(ids.empty(), "empty text produced " + std::to_string(ids.size()) + " tokens");
        return std::string();
    });

    run("tokenize_round_trip_ascii", [&] {
        const auto ids = session->tokenize(kProbeText);
        expect(!ids.empty(), "probe text produced no tokens");
        for (Symbol id : ids) expect(id < info.vocab_size, "token id " + std::to_string(id) + " outside vocabulary");
        expect(session->detokenize(ids) == kProbeText, "detokenize(tokenize(text)) differs from text");
        return std::to_string(ids.size()) + " tokens";
    });

    std::vector<Symbol> tokens;
    std::vector<double> metrics;
    run("metrics_reply", [&] {
        tokens = probe_tokens(*session, probe_len);
        EvalRequest r{tokens, OutputMode::metrics, Alphabet::vocab, kDefaultPrecision, 0};
        metrics = session->evaluate(r).log2_probs;  // shape, finiteness and bos echo checked by the client
        return std::to_string(metrics.size()) + " positions";
    });

    run("score_from_suffix", [&] {
        expect(tokens.size() >= 2, "probe too short");
        const std::size_t k = tokens.size() / 2;
        EvalRequest r{tokens, OutputMode::metrics, Alphabet::vocab, kDefaultPrecision, k};
        const auto suffix = session->evaluate(r).log2_probs;
        expect(std::equal(suffix.begin(), suffix.end(), metrics.begin() + static_cast<std::ptrdiff_t>(k),
                          metrics.end()),
               "scores with score_from differ from the full-chunk scores");
        return std::string();
    });

    run("deterministic_replies", [&] {
        for (auto mode : {OutputMode::metrics, OutputMode::codec}) {
            EvalRequest r{tokens, mode, Alphabet::vocab, kDefaultPrecision, 0};
            auto first = make_eval(0, r);
            first.erase("seq");
            auto second = first;
            const auto a = strip_seq(session->exchange(first));
            const auto b = strip_seq(session->exchange(second));
            expect(message_type(a) == "eval_ack", "eval failed: " + to_line(a));
            expect(to_line(a) == to_line(b), "identical requests produced different replies");
        }
        return std::string();
    });

    std::vector<QuantizedPmf> rows;
    run("codec_round_trip", [&] {
        EvalRequest r{tokens, OutputMode::codec, Alphabet::vocab, kDefaultPrecision, 0};
        rows = session->evaluate(r).pmfs;
        const CoderConfig config{kDefaultRegisterWidth, kDefaultPrecision};
        ReplayPmfSource enc(rows);
        const auto frame = encode_symbols(tokens, enc, config);
        ReplayPmfSource dec(rows);
        const auto back = decode_symbols(frame, dec, config);
        expect(back == tokens, "decoded tokens differ from the input");
        return std::to_string(frame.bit_length) + " bits";
    });

    run("metrics_codec_agreement", [&] {
        expect(rows.size() == metrics.size(), "codec and metrics replies differ in length");
        const double unit = std::ldexp(1.0, -kDefaultPrecision);
        std::size_t checked = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& row = rows[i];
            std::uint32_t min_freq = UINT32_MAX;
            for (Symbol s = 0; s < row.alphabet_size(); ++s) min_freq = std::min(min_freq, row.frequency(s));
            // Frequencies >= 5 rule out zero repair, so every probability is >= 4 units.
            if (min_freq < 5) continue;
            const double p = std::exp2(metrics[i]);
            const double excess = row.bits(tokens[i]) - (-metrics[i]);
            expect(excess <= 2.0 * unit / p + 1e-12,
                   "position " + std::to_string(i) + ": quantized cost exceeds the real cost by " + std::to_string(excess));
            ++checked;
        }
        return std::to_string(checked) + " positions checked";
    });

    run("context_overflow_rejected", [&] {
        EvalRequest r;
        r.tokens.assign(info.max_chunk_tokens() + 1, tokens.empty() ? 0 : tokens.front());
        auto m = make_eval(0, r);
        m.erase("seq");
        const auto reply = session->exchange(m);
        expect_error(reply, message_seq(reply), ErrorCode::context_overflow);
        return std::string();
    });

    run("byte_alphabet", [&] {
        EvalRequest r;
        r.alphabet = Alphabet::bytes;
        r.mode = OutputMode::codec;
        if (!info.byte_token_map) {
            r.tokens = tokens;
            auto m = make_eval(0, r);
            m.erase("seq");
            const auto reply = session->exchange(m);
            expect_error(reply, message_seq(reply), ErrorCode::unsupported);
            return std::string("rejected without a byte map");
        }
        const std::string text = kProbeText;
        for (std::size_t i = 0; i < std::min(text.size(), probe_len); ++i)
            r.tokens.push_back(info.byte_token_map->token(static_cast<std::uint8_t>(text[i])));
        const auto codec = session->evaluate(r);
        r.mode = OutputMode::metrics;
        const auto m = session->evaluate(r);
        expect(codec.pmfs.size() == m.log2_probs.size(), "codec and metrics replies differ in length");
        for (std::size_t i = 0; i < codec.pmfs.size(); ++i)
            expect(codec.pmfs[i].alphabet_size() == 256, "byte alphabet rows must have 256 entries");
        return std::string("256-symbol rows");
    });

    run("malformed_request_rejected", [&] {
        auto m = make_eval(0, EvalRequest{{1}, OutputMode::metrics, Alphabet::vocab, kDefaultPrecision, 0});
        m.erase("seq");
        m.erase("tokens");
        const auto reply = session->exchange(m);
        expect_error(reply, message_seq(reply), ErrorCode::bad_request);
        expect(session->tokenize("ok").size() > 0, "session unusable after an error reply");
        return std::string();
    });

    run("unknown_type_rejected", [&] {
        Message m = Message::object();
        m["type"] = "frobnicate";
        const auto reply = session->exchange(m);
        expect_error(reply, message_seq(reply), ErrorCode::bad_request);
        return std::string();
    });

    run("bye", [&] {
        session->close();
        return std::string();
    });
    return report;
}

std::vector<std::string> fixture_requests() {
    std::vector<std::string> lines;
    std::uint64_t seq = 2;
    const std::vector<Symbol> chunk{84, 104, 101, 32, 99, 97, 116, 32, 115, 97, 116, 46};
    lines.push_back(to_line(make_tokenize(seq++, "Hello, world")));
    lines.push_back(to_line(make_detokenize(seq++, chunk)));
    lines.push_back(to_line(make_eval(seq++, EvalRequest{chunk, OutputMode::metrics, Alphabet::vocab, 16, 0})));
    lines.push_back(to_line(make_eval(seq++, EvalRequest{chunk, OutputMode::metrics, Alphabet::vocab, 16, 8})));
    lines.push_back(to_line(make_eval(seq++, EvalRequest{chunk, OutputMode::codec, Alphabet::vocab, 16, 0})));
    lines.push_back(to_line(make_eval(seq++, EvalRequest{chunk, OutputMode::codec, Alphabet::bytes, 12, 4})));
    Message unknown = Message::object();
    unknown["type"] = "unknown";
    unknown["seq"] = seq++;
    lines.push_back(to_line(unknown));
    lines.push_back(to_line(make_bye(seq++)));
    return lines;
}

std::vector<std::string> record_transcript(const std::string& endpoint) {
    auto t = connect(endpoint);
    std::vector<std::string> replies;
    t->send_line(to_line(make_hello(1)));
    replies.push_back(t->receive_line());
    for (const auto& line : fixture_requests()) {
        t->send_line(line);
        replies.push_back(t->receive_line());
    }
    return replies;
}

}  // namespace modelzip::bridge
