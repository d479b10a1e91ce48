#pragma once

#include "modelzip/byte_map.hpp"
#include "modelzip/model.hpp"
#include "modelzip/quantized_pmf.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Protocol v1: one JSON object per line. Every message carries "type" and
// "seq"; client seq values increase strictly and replies echo the seq of
// the request they answer. See docs/protocol.md.
namespace modelzip::bridge {

inline constexpr int kProtocolVersion = 1;
// PMF rows travel as u16 frequencies.
inline constexpr int kMaxWirePrecision = 16;

using Message = nlohmann::json;

enum class BosPolicy { none, prepend_per_chunk };
enum class Alphabet { vocab, bytes };
enum class ErrorCode { bad_request, version_mismatch, context_overflow, unsupported, internal };

std::string_view to_string(BosPolicy p);
BosPolicy parse_bos_policy(std::string_view s);
std::string_view to_string(Alphabet a);
Alphabet parse_alphabet(std::string_view s);
std::string_view to_string(ErrorCode c);
ErrorCode parse_error_code(std::string_view s);

struct SessionInfo {
    std::string model_name;
    std::size_t vocab_size = 0;
    std::size_t context_limit = 0;
    BosPolicy bos_policy = BosPolicy::none;
    std::optional<ByteTokenMap> byte_token_map;  // absent: no byte-domain evaluation

    // Longest chunk that fits once a per-chunk BOS is accounted for.
    [[nodiscard]] std::size_t max_chunk_tokens() const noexcept {
        return context_limit - (bos_policy == BosPolicy::prepend_per_chunk ? 1 : 0);
    }
    void validate() const;

    friend bool operator==(const SessionInfo&, const SessionInfo&) = default;
};

// One chunk under teacher forcing. Positions before score_from only
// condition; results cover positions [score_from, tokens.size()).
struct EvalRequest {
    std::vector<Symbol> tokens;
    OutputMode mode = OutputMode::metrics;
    Alphabet alphabet = Alphabet::vocab;
    int precision = kDefaultPrecision;
    std::size_t score_from = 0;

    [[nodiscard]] std::size_t scored_count() const noexcept { return tokens.size() - score_from; }
};

struct EvalResponse {
    OutputMode mode = OutputMode::metrics;
    BosPolicy bos_policy = BosPolicy::none;
    std::vector<double> log2_probs;  // metrics: log2 P of each realized symbol
    std::vector<QuantizedPmf> pmfs;  // codec: one table per scored position
};

// Serialized form without the trailing newline. Invalid UTF-8 in strings
// is replaced by U+FFFD.
std::string to_line(const Message& m);

Message make_hello(std::uint64_t seq, int protocol = kProtocolVersion);
Message make_hello_ack(std::uint64_t seq, const SessionInfo& info);
Message make_tokenize(std::uint64_t seq, std::string_view text);
Message make_tokenize_reply(std::uint64_t seq, std::span<const Symbol> ids);
Message make_detokenize(std::uint64_t seq, std::span<const Symbol> ids);
Message make_detokenize_reply(std::uint64_t seq, std::string_view text);
Message make_eval(std::uint64_t seq, const EvalRequest& request);
Message make_eval_metrics_reply(std::uint64_t seq, BosPolicy bos, std::span<const double> log2_probs);
Message make_eval_codec_reply(std::uint64_t seq, BosPolicy bos, int precision, std::size_t alphabet_size,
                              std::span<const QuantizedPmf> rows);
Message make_error(std::uint64_t seq, ErrorCode code, std::string_view message);
Message make_bye(std::uint64_t seq);

// True for integers >= 0 whether stored signed or unsigned.
bool is_non_negative_integer(const Message& v);

// Parses one line and checks the envelope ("type" string, "seq" unsigned).
// Throws ProtocolError naming the offending field.
Message parse_message(std::string_view line);
std::string message_type(const Message& m);
std::uint64_t message_seq(const Message& m);

SessionInfo parse_hello_ack(const Message& m);
EvalRequest parse_eval(const Message& m);
// Checks shape against the request: counts, finiteness, table validity.
EvalResponse parse_eval_reply(const Message& m, const EvalRequest& request, std::size_t alphabet_size);
std::vector<Symbol> parse_ids(const Message& m, const char* field);

// Base64 of little-endian u16 frequencies, alphabet_size entries.
std::string encode_pmf_row(const QuantizedPmf& pmf);
QuantizedPmf decode_pmf_row(std::string_view base64, std::size_t alphabet_size, int precision);

}  // namespace modelzip::bridge
