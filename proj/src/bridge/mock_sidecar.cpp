#include "modelzip/bridge/mock_sidecar.hpp"

#include "modelzip/bridge/transport.hpp"
#include "modelzip/byte_map.hpp"
#include "modelzip/error.hpp"
#include "modelzip/model_registry.hpp"

#include <charconv>
#include <cmath>

namespace modelzip::bridge {

namespace {

constexpr double kByteMass = 0.75;

std::size_t parse_size(std::string_view key, std::string_view v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
        throw InvalidArgument("mock option " + std::string(key) + " needs an integer, got '" + std::string(v) + "'");
    return out;
}

// Error carrying a protocol error code back to the dispatcher.
struct RequestError {
    ErrorCode code;
    std::string message;
};

}  // namespace

MockConfig parse_mock_config(std::string_view text) {
    MockConfig c;
    std::size_t start = 0;
    bool first = true;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        start = comma == std::string_view::npos ? text.size() + 1 : comma + 1;
        if (first) {
            first = false;
            if (!item.empty()) c.kind = std::string(item);
            continue;
        }
        const auto eq = item.find('=');
        const auto key = item.substr(0, eq);
        const auto value = eq == std::string_view::npos ? std::string_view{} : item.substr(eq + 1);
        if (key == "vocab")
            c.vocab_size = parse_size(key, value);
        else if (key == "offset")
            c.offset = static_cast<Symbol>(parse_size(key, value));
        else if (key == "context")
            c.context_limit = parse_size(key, value);
        else if (key == "no-byte-map")
            c.advertise_byte_map = false;
        else if (key == "lossy")
            c.lossy = true;
        else if (key == "bos")
            c.bos_policy = BosPolicy::prepend_per_chunk;
        else
            throw InvalidArgument("unknown mock option '" + std::string(item) + "'");
    }
    return c;
}

MockSidecar::MockSidecar(MockConfig config) : config_(std::move(config)), model_(make_model(config_.kind)) {
    if (model_->alphabet_size() != 256) throw InvalidArgument("mock sidecar needs a byte model, got " + model_->id());
    if (config_.vocab_size < std::size_t{256} + config_.offset)
        throw InvalidArgument("mock vocabulary must hold 256 byte tokens after the offset");
    if (config_.vocab_size > (std::size_t{1} << kMaxWirePrecision))
        throw InvalidArgument("mock vocabulary larger than 65536 cannot be coded at 16-bit precision");
    info_.model_name = "mock-" + model_->id();
    info_.vocab_size = config_.vocab_size;
    info_.context_limit = config_.context_limit;
    info_.bos_policy = config_.bos_policy;
    if (config_.advertise_byte_map) info_.byte_token_map = ByteTokenMap::offset(config_.offset);
    info_.validate();
}

std::uint8_t MockSidecar::byte_of(Symbol token) const {
    if (token < config_.offset || token >= config_.offset + 256)
        throw RequestError{ErrorCode::bad_request, "token " + std::to_string(token) + " is not a byte token"};
    return static_cast<std::uint8_t>(token - config_.offset);
}

std::string MockSidecar::handle(std::string_view line) {
    std::uint64_t seq = 0;
    try {
        const Message request = parse_message(line);
        seq = message_seq(request);
        return to_line(dispatch(request));
    } catch (const RequestError& e) {
        return to_line(make_error(seq, e.code, e.message));
    } catch (const ProtocolError& e) {
        return to_line(make_error(seq, ErrorCode::bad_request, e.what()));
    } catch (const std::exception& e) {
        return to_line(make_error(seq, ErrorCode::internal, e.what()));
    }
}

Message MockSidecar::dispatch(const Message& request) {
    const auto type = message_type(request);
    const auto seq = message_seq(request);
    if (last_seq_ && seq <= *last_seq_)
        throw RequestError{ErrorCode::bad_request, "seq " + std::to_string(seq) + " does not increase"};
    last_seq_ = seq;

    if (type == "hello") {
        const auto& v = request.contains("protocol") ? request["protocol"] : Message();
        if (!is_non_negative_integer(v)) throw ProtocolError("hello: field 'protocol' must be a non-negative integer");
        if (v.get<std::uint64_t>() != kProtocolVersion)
            throw RequestError{ErrorCode::version_mismatch,
                               "server speaks protocol " + std::to_string(kProtocolVersion) + ", client asked for " +
                                   std::to_string(v.get<std::uint64_t>())};
        greeted_ = true;
        return make_hello_ack(seq, info_);
    }
    if (!greeted_) throw RequestError{ErrorCode::bad_request, "first message must be hello"};
    if (type == "bye") {
        finished_ = true;
        return make_bye(seq);
    }
    if (type == "tokenize") {
        if (!request.contains("text") || !request["text"].is_string())
            throw ProtocolError("tokenize: field 'text' must be a string");
        const auto& text = request["text"].get_ref<const std::string&>();
        std::vector<Symbol> ids;
        ids.reserve(text.size());
        for (unsigned char c : text) {
            const unsigned char b = (config_.lossy && c >= 0x80) ? '?' : c;
            ids.push_back(config_.offset + b);
        }
        return make_tokenize_reply(seq, ids);
    }
    if (type == "detokenize") {
        const auto ids = parse_ids(request, "ids");
        std::string text;
        text.reserve(ids.size());
        for (Symbol id : ids) text.push_back(static_cast<char>(byte_of(id)));
        return make_detokenize_reply(seq, text);
    }
    if (type == "eval") return evaluate(seq, parse_eval(request));
    throw RequestError{ErrorCode::bad_request, "unknown message type '" + type + "'"};
}

Message MockSidecar::evaluate(std::uint64_t seq, const EvalRequest& request) {
    if (request.tokens.size() > info_.max_chunk_tokens())
        throw RequestError{ErrorCode::context_overflow,
                           std::to_string(request.tokens.size()) + " tokens exceed the context limit of " +
                               std::to_string(info_.context_limit) + " (bos_policy " +
                               std::string(to_string(info_.bos_policy)) + ")"};
    const bool bytes = request.alphabet == Alphabet::bytes;
    if (bytes && !info_.byte_token_map)
        throw RequestError{ErrorCode::unsupported, "this model reserves no byte tokens"};
    const std::size_t alphabet = bytes ? 256 : info_.vocab_size;
    if (request.mode == OutputMode::codec) {
        if (request.precision < 1 || request.precision > kMaxWirePrecision)
            throw RequestError{ErrorCode::unsupported,
                               "codec precision must be in [1, " + std::to_string(kMaxWirePrecision) + "]"};
        if ((std::size_t{1} << request.precision) < alphabet)
            throw RequestError{ErrorCode::bad_request, "precision too small for the alphabet"};
    }
    std::vector<std::uint8_t> history;
    history.reserve(request.tokens.size());
    for (Symbol t : request.tokens) history.push_back(byte_of(t));

    const bool extended = !bytes && info_.vocab_size > 256;
    const double other_mass = extended ? (1.0 - kByteMass) / static_cast<double>(info_.vocab_size - 256) : 0.0;
    model_->reset();
    std::vector<double> byte_probs(256);
    std::vector<double> probs(alphabet);
    std::vector<double> log2_probs;
    std::vector<QuantizedPmf> rows;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (i >= request.score_from) {
            if (request.mode == OutputMode::metrics) {
                double lp = model_->log2_prob(history[i]);
                if (extended) lp += std::log2(kByteMass);
                log2_probs.push_back(lp);
            } else {
                model_->probabilities(byte_probs);
                if (bytes || !extended) {
                    if (bytes) {
                        std::copy(byte_probs.begin(), byte_probs.end(), probs.begin());
                    } else {
                        std::fill(probs.begin(), probs.end(), 0.0);
                        for (std::size_t b = 0; b < 256; ++b) probs[config_.offset + b] = byte_probs[b];
                    }
                } else {
                    std::fill(probs.begin(), probs.end(), other_mass);
                    for (std::size_t b = 0; b < 256; ++b) probs[config_.offset + b] = kByteMass * byte_probs[b];
                }
                rows.push_back(quantize_pmf(probs, request.precision));
            }
        }
        model_->update(history[i]);
    }
    if (request.mode == OutputMode::metrics) return make_eval_metrics_reply(seq, info_.bos_policy, log2_probs);
    return make_eval_codec_reply(seq, info_.bos_policy, request.precision, alphabet, rows);
}

void MockSidecar::serve(int in_fd, int out_fd) {
    FdTransport io(in_fd, out_fd, false, std::chrono::milliseconds(-1));  // no timeout
    while (!finished_) {
        std::string line;
        try {
            line = io.receive_line();
        } catch (const TransportError&) {
            return;  // peer closed
        }
        if (line.empty()) continue;
        io.send_line(handle(line));
    }
}

}  // namespace modelzip::bridge
