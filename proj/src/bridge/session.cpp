#include "modelzip/bridge/session.hpp"

#include "modelzip/error.hpp"
#include "modelzip/io.hpp"

namespace modelzip::bridge {

Session::Session(std::unique_ptr<Transport> transport, std::string endpoint)
    : transport_(std::move(transport)), endpoint_(std::move(endpoint)) {
    if (!transport_) throw InvalidArgument("session needs a transport");
    const auto seq = next_seq_++;
    transport_->send_line(to_line(make_hello(seq)));
    const auto reply = parse_message(transport_->receive_line());
    if (message_seq(reply) != seq) throw ProtocolError("hello_ack: field 'seq' does not echo the hello");
    if (message_type(reply) == "error") {
        const auto code = reply.value("code", std::string("internal"));
        throw ProtocolError("sidecar refused the handshake (" + code + "): " + reply.value("message", std::string()));
    }
    info_ = parse_hello_ack(reply);
    open_ = true;
}

Session::~Session() {
    try {
        close();
    } catch (...) {
    }
}

std::unique_ptr<Session> Session::open(const std::string& endpoint) {
    return std::make_unique<Session>(connect(endpoint), endpoint);
}

SessionInfo open_session(const std::string& endpoint) { return Session::open(endpoint)->info(); }

Message Session::exchange(Message request) {
    if (!request.contains("seq")) request["seq"] = next_seq_;
    if (is_non_negative_integer(request["seq"]) && request["seq"].get<std::uint64_t>() >= next_seq_)
        next_seq_ = request["seq"].get<std::uint64_t>() + 1;
    transport_->send_line(to_line(request));
    return parse_message(transport_->receive_line());
}

Message Session::call(Message request) {
    if (!open_) throw ProtocolError("session is closed");
    const auto seq = next_seq_++;
    request["seq"] = seq;
    const auto type = message_type(request);
    transport_->send_line(to_line(request));
    Message reply = parse_message(transport_->receive_line());
    if (message_seq(reply) != seq)
        throw ProtocolError(message_type(reply) + ": field 'seq' is " + std::to_string(message_seq(reply)) +
                            ", expected " + std::to_string(seq));
    if (message_type(reply) == "error") {
        const auto code = reply.value("code", std::string("internal"));
        const auto message = "sidecar " + info_.model_name + ": " + reply.value("message", std::string());
        ErrorCode parsed = ErrorCode::internal;
        try {
            parsed = parse_error_code(code);
        } catch (const ProtocolError&) {
        }
        switch (parsed) {
            case ErrorCode::context_overflow: throw ContextOverflow(message);
            case ErrorCode::bad_request:
            case ErrorCode::unsupported: throw InvalidArgument(message + " (" + code + ")");
            default: throw Error(message + " (" + code + ")", ErrorKind::internal);
        }
    }
    const auto expected = type == "eval" ? "eval_ack" : type;
    if (message_type(reply) != expected)
        throw ProtocolError("expected " + std::string(expected) + " reply, got " + message_type(reply));
    return reply;
}

std::vector<Symbol> Session::tokenize(std::string_view text) {
    if (!is_valid_utf8(as_bytes(text))) throw InvalidArgument("tokenize needs valid UTF-8 text");
    return parse_ids(call(make_tokenize(0, text)), "ids");
}

std::string Session::detokenize(std::span<const Symbol> ids) {
    const auto reply = call(make_detokenize(0, ids));
    if (!reply.contains("text") || !reply["text"].is_string())
        throw ProtocolError("detokenize: field 'text' must be a string");
    return reply["text"].get<std::string>();
}

EvalResponse Session::evaluate(const EvalRequest& request) {
    if (request.tokens.empty()) throw InvalidArgument("eval needs at least one token");
    if (request.score_from >= request.tokens.size()) throw InvalidArgument("score_from must lie inside the chunk");
    if (request.tokens.size() > info_.max_chunk_tokens())
        throw ContextOverflow("chunk of " + std::to_string(request.tokens.size()) + " tokens exceeds the context limit " +
                              std::to_string(info_.context_limit) + " of " + info_.model_name + " (bos_policy " +
                              std::string(to_string(info_.bos_policy)) + ")");
    if (request.alphabet == Alphabet::bytes && !info_.byte_token_map)
        throw InvalidArgument("model " + info_.model_name +
                              " reserves no byte tokens; byte-domain evaluation is not available");
    if (request.mode == OutputMode::codec && (request.precision < 1 || request.precision > kMaxWirePrecision))
        throw InvalidArgument("codec precision must be in [1, " + std::to_string(kMaxWirePrecision) + "]");
    const std::size_t alphabet = request.alphabet == Alphabet::bytes ? 256 : info_.vocab_size;
    auto response = parse_eval_reply(call(make_eval(0, request)), request, alphabet);
    if (response.bos_policy != info_.bos_policy)
        throw ProtocolError("eval_ack: field 'bos_policy' differs from the handshake");
    return response;
}

void Session::close() {
    if (!open_) return;
    open_ = false;
    const auto seq = next_seq_++;
    transport_->send_line(to_line(make_bye(seq)));
    const auto reply = parse_message(transport_->receive_line());
    if (message_type(reply) != "bye") throw ProtocolError("expected bye, got " + message_type(reply));
}

}  // namespace modelzip::bridge
