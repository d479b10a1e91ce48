#include "modelzip/bridge/protocol.hpp"

#include "modelzip/bridge/base64.hpp"
#include "modelzip/error.hpp"

#include <cmath>

namespace modelzip::bridge {

using nlohmann::json;

std::string_view to_string(BosPolicy p) { return p == BosPolicy::none ? "none" : "prepend_per_chunk"; }

BosPolicy parse_bos_policy(std::string_view s) {
    if (s == "none") return BosPolicy::none;
    if (s == "prepend_per_chunk") return BosPolicy::prepend_per_chunk;
    throw ProtocolError("unknown bos_policy '" + std::string(s) + "'");
}

std::string_view to_string(Alphabet a) { return a == Alphabet::vocab ? "vocab" : "bytes"; }

Alphabet parse_alphabet(std::string_view s) {
    if (s == "vocab") return Alphabet::vocab;
    if (s == "bytes") return Alphabet::bytes;
    throw ProtocolError("unknown alphabet '" + std::string(s) + "'");
}

std::string_view to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::bad_request: return "bad_request";
        case ErrorCode::version_mismatch: return "version_mismatch";
        case ErrorCode::context_overflow: return "context_overflow";
        case ErrorCode::unsupported: return "unsupported";
        case ErrorCode::internal: return "internal";
    }
    return "internal";
}

ErrorCode parse_error_code(std::string_view s) {
    for (auto c : {ErrorCode::bad_request, ErrorCode::version_mismatch, ErrorCode::context_overflow,
                   ErrorCode::unsupported, ErrorCode::internal})
        if (to_string(c) == s) return c;
    throw ProtocolError("unknown error code '" + std::string(s) + "'");
}

void SessionInfo::validate() const {
    if (context_limit < 2) throw ProtocolError("hello_ack: field 'context_limit' must be at least 2");
    if (vocab_size < 2) throw ProtocolError("hello_ack: field 'vocab_size' must be at least 2");
    if (byte_token_map && byte_token_map->max_token() >= vocab_size)
        throw ProtocolError("hello_ack: field 'byte_token_map' has ids outside the vocabulary");
}

namespace {

Message envelope(const char* type, std::uint64_t seq) {
    Message m = json::object();
    m["type"] = type;
    m["seq"] = seq;
    return m;
}

std::string where(const Message& m) {
    return m.contains("type") && m["type"].is_string() ? m["type"].get<std::string>() : std::string("message");
}

const json& require(const Message& m, const char* field) {
    auto it = m.find(field);
    if (it == m.end()) throw ProtocolError(where(m) + ": missing field '" + field + "'");
    return *it;
}

[[noreturn]] void bad_field(const Message& m, const char* field, const char* expected) {
    throw ProtocolError(where(m) + ": field '" + field + "' must be " + expected);
}

}  // namespace

bool is_non_negative_integer(const Message& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

namespace {

std::uint64_t get_unsigned(const Message& m, const char* field) {
    const auto& v = require(m, field);
    if (!is_non_negative_integer(v)) bad_field(m, field, "a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string get_string(const Message& m, const char* field) {
    const auto& v = require(m, field);
    if (!v.is_string()) bad_field(m, field, "a string");
    return v.get<std::string>();
}

}  // namespace

std::string to_line(const Message& m) { return m.dump(-1, ' ', false, json::error_handler_t::replace); }

Message make_hello(std::uint64_t seq, int protocol) {
    auto m = envelope("hello", seq);
    m["protocol"] = protocol;
    return m;
}

Message make_hello_ack(std::uint64_t seq, const SessionInfo& info) {
    auto m = envelope("hello_ack", seq);
    m["protocol"] = kProtocolVersion;
    m["model_name"] = info.model_name;
    m["vocab_size"] = info.vocab_size;
    m["context_limit"] = info.context_limit;
    m["bos_policy"] = to_string(info.bos_policy);
    m["byte_token_map"] = info.byte_token_map ? json(info.byte_token_map->table()) : json(nullptr);
    return m;
}

Message make_tokenize(std::uint64_t seq, std::string_view text) {
    auto m = envelope("tokenize", seq);
    m["text"] = text;
    return m;
}

Message make_tokenize_reply(std::uint64_t seq, std::span<const Symbol> ids) {
    auto m = envelope("tokenize", seq);
    m["ids"] = std::vector<Symbol>(ids.begin(), ids.end());
    return m;
}

Message make_detokenize(std::uint64_t seq, std::span<const Symbol> ids) {
    auto m = envelope("detokenize", seq);
    m["ids"] = std::vector<Symbol>(ids.begin(), ids.end());
    return m;
}

Message make_detokenize_reply(std::uint64_t seq, std::string_view text) {
    auto m = envelope("detokenize", seq);
    m["text"] = text;
    return m;
}

Message make_eval(std::uint64_t seq, const EvalRequest& r) {
    auto m = envelope("eval", seq);
    m["mode"] = r.mode == OutputMode::metrics ? "metrics" : "codec";
    m["alphabet"] = to_string(r.alphabet);
    m["precision"] = r.precision;
    m["score_from"] = r.score_from;
    m["tokens"] = r.tokens;
    return m;
}

Message make_eval_metrics_reply(std::uint64_t seq, BosPolicy bos, std::span<const double> log2_probs) {
    auto m = envelope("eval_ack", seq);
    m["mode"] = "metrics";
    m["bos_policy"] = to_string(bos);
    m["log2_probs"] = std::vector<double>(log2_probs.begin(), log2_probs.end());
    return m;
}

Message make_eval_codec_reply(std::uint64_t seq, BosPolicy bos, int precision, std::size_t alphabet_size,
                              std::span<const QuantizedPmf> rows) {
    auto m = envelope("eval_ack", seq);
    m["mode"] = "codec";
    m["bos_policy"] = to_string(bos);
    m["precision"] = precision;
    m["alphabet_size"] = alphabet_size;
    json pmfs = json::array();
    for (const auto& row : rows) pmfs.push_back(encode_pmf_row(row));
    m["pmfs"] = std::move(pmfs);
    return m;
}

Message make_error(std::uint64_t seq, ErrorCode code, std::string_view message) {
    auto m = envelope("error", seq);
    m["code"] = to_string(code);
    m["message"] = message;
    return m;
}

Message make_bye(std::uint64_t seq) { return envelope("bye", seq); }

Message parse_message(std::string_view line) {
    Message m;
    try {
        m = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed JSON line: ") + e.what());
    }
    if (!m.is_object()) throw ProtocolError("message is not a JSON object");
    if (!m.contains("type") || !m["type"].is_string()) throw ProtocolError("message: field 'type' must be a string");
    if (!m.contains("seq") || !is_non_negative_integer(m["seq"]))
        throw ProtocolError(where(m) + ": field 'seq' must be a non-negative integer");
    return m;
}

std::string message_type(const Message& m) { return m.at("type").get<std::string>(); }
std::uint64_t message_seq(const Message& m) { return m.at("seq").get<std::uint64_t>(); }

SessionInfo parse_hello_ack(const Message& m) {
    if (message_type(m) != "hello_ack") throw ProtocolError("expected hello_ack, got " + message_type(m));
    if (get_unsigned(m, "protocol") != kProtocolVersion)
        throw ProtocolError("hello_ack: field 'protocol' is " + std::to_string(get_unsigned(m, "protocol")) +
                            ", this client speaks " + std::to_string(kProtocolVersion));
    SessionInfo info;
    info.model_name = get_string(m, "model_name");
    info.vocab_size = get_unsigned(m, "vocab_size");
    info.context_limit = get_unsigned(m, "context_limit");
    try {
        info.bos_policy = parse_bos_policy(get_string(m, "bos_policy"));
    } catch (const ProtocolError&) {
        bad_field(m, "bos_policy", "\"none\" or \"prepend_per_chunk\"");
    }
    const auto& map = require(m, "byte_token_map");
    if (!map.is_null()) {
        if (!map.is_array() || map.size() != 256) bad_field(m, "byte_token_map", "null or an array of 256 ids");
        std::array<Symbol, 256> table{};
        for (std::size_t b = 0; b < 256; ++b) {
            if (!is_non_negative_integer(map[b]) || map[b].get<std::uint64_t>() > UINT32_MAX)
                bad_field(m, "byte_token_map", "an array of unsigned 32-bit ids");
            table[b] = map[b].get<Symbol>();
        }
        try {
            info.byte_token_map.emplace(table);
        } catch (const InvalidArgument&) {
            bad_field(m, "byte_token_map", "injective");
        }
    }
    info.validate();
    return info;
}

std::vector<Symbol> parse_ids(const Message& m, const char* field) {
    const auto& v = require(m, field);
    if (!v.is_array()) bad_field(m, field, "an array of token ids");
    std::vector<Symbol> ids;
    ids.reserve(v.size());
    for (const auto& x : v) {
        if (!is_non_negative_integer(x) || x.get<std::uint64_t>() > UINT32_MAX)
            bad_field(m, field, "an array of unsigned 32-bit token ids");
        ids.push_back(x.get<Symbol>());
    }
    return ids;
}

EvalRequest parse_eval(const Message& m) {
    EvalRequest r;
    const auto mode = get_string(m, "mode");
    if (mode == "metrics")
        r.mode = OutputMode::metrics;
    else if (mode == "codec")
        r.mode = OutputMode::codec;
    else
        bad_field(m, "mode", "\"metrics\" or \"codec\"");
    try {
        r.alphabet = parse_alphabet(get_string(m, "alphabet"));
    } catch (const ProtocolError&) {
        bad_field(m, "alphabet", "\"vocab\" or \"bytes\"");
    }
    r.precision = static_cast<int>(std::min<std::uint64_t>(get_unsigned(m, "precision"), 64));
    r.score_from = m.contains("score_from") ? get_unsigned(m, "score_from") : 0;
    r.tokens = parse_ids(m, "tokens");
    if (r.tokens.empty()) bad_field(m, "tokens", "non-empty");
    if (r.score_from >= r.tokens.size()) bad_field(m, "score_from", "less than the number of tokens");
    return r;
}

EvalResponse parse_eval_reply(const Message& m, const EvalRequest& request, std::size_t alphabet_size) {
    if (message_type(m) != "eval_ack") throw ProtocolError("expected eval_ack, got " + message_type(m));
    EvalResponse r;
    r.bos_policy = parse_bos_policy(get_string(m, "bos_policy"));
    const auto mode = get_string(m, "mode");
    const std::size_t expected = request.scored_count();
    if (mode == "metrics") {
        if (request.mode != OutputMode::metrics) bad_field(m, "mode", "the requested mode");
        r.mode = OutputMode::metrics;
        const auto& v = require(m, "log2_probs");
        if (!v.is_array()) bad_field(m, "log2_probs", "an array");
        if (v.size() != expected)
            throw ProtocolError("eval_ack: field 'log2_probs' has " + std::to_string(v.size()) + " entries, expected " +
                                std::to_string(expected));
        r.log2_probs.reserve(expected);
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ProtocolError("eval_ack: log2_probs[" + std::to_string(i) + "] is not a number");
            const double x = v[i].get<double>();
            if (!std::isfinite(x) || x > 0.0)
                throw ProtocolError("eval_ack: log2_probs[" + std::to_string(i) + "] is not a finite value <= 0");
            r.log2_probs.push_back(x);
        }
    } else if (mode == "codec") {
        if (request.mode != OutputMode::codec) bad_field(m, "mode", "the requested mode");
        r.mode = OutputMode::codec;
        if (static_cast<int>(get_unsigned(m, "precision")) != request.precision)
            bad_field(m, "precision", "the requested precision");
        if (get_unsigned(m, "alphabet_size") != alphabet_size)
            bad_field(m, "alphabet_size", ("equal to " + std::to_string(alphabet_size)).c_str());
        const auto& v = require(m, "pmfs");
        if (!v.is_array()) bad_field(m, "pmfs", "an array");
        if (v.size() != expected)
            throw ProtocolError("eval_ack: field 'pmfs' has " + std::to_string(v.size()) + " rows, expected " +
                                std::to_string(expected));
        r.pmfs.reserve(expected);
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_string()) throw ProtocolError("eval_ack: pmfs[" + std::to_string(i) + "] is not a string");
            try {
                r.pmfs.push_back(decode_pmf_row(v[i].get<std::string>(), alphabet_size, request.precision));
            } catch (const Error& e) {
                throw ProtocolError("eval_ack: pmfs[" + std::to_string(i) + "]: " + e.what());
            }
        }
    } else {
        bad_field(m, "mode", "\"metrics\" or \"codec\"");
    }
    return r;
}

std::string encode_pmf_row(const QuantizedPmf& pmf) {
    if (pmf.precision() > kMaxWirePrecision)
        throw InvalidArgument("PMF rows on the wire need precision <= " + std::to_string(kMaxWirePrecision));
    std::vector<std::uint8_t> bytes;
    bytes.reserve(pmf.alphabet_size() * 2);
    for (Symbol s = 0; s < pmf.alphabet_size(); ++s) {
        const auto f = pmf.frequency(s);
        bytes.push_back(static_cast<std::uint8_t>(f & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>(f >> 8));
    }
    return base64_encode(bytes);
}

QuantizedPmf decode_pmf_row(std::string_view text, std::size_t alphabet_size, int precision) {
    if (precision < 1 || precision > kMaxWirePrecision)
        throw ProtocolError("PMF precision must be in [1, " + std::to_string(kMaxWirePrecision) + "]");
    const auto bytes = base64_decode(text);
    if (bytes.size() != alphabet_size * 2)
        throw ProtocolError("PMF row holds " + std::to_string(bytes.size() / 2) + " frequencies, expected " +
                            std::to_string(alphabet_size));
    std::vector<std::uint32_t> cum(alphabet_size + 1, 0);
    std::uint64_t acc = 0;
    for (std::size_t s = 0; s < alphabet_size; ++s) {
        acc += static_cast<std::uint32_t>(bytes[2 * s]) | (static_cast<std::uint32_t>(bytes[2 * s + 1]) << 8);
        if (acc > (std::uint64_t{1} << precision)) throw ProtocolError("PMF row frequencies exceed 2^precision");
        cum[s + 1] = static_cast<std::uint32_t>(acc);
    }
    try {
        return QuantizedPmf(std::move(cum), precision);
    } catch (const InvalidArgument& e) {
        throw ProtocolError(std::string("invalid PMF row: ") + e.what());
    }
}

}  // namespace modelzip::bridge
