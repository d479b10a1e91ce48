#pragma once

#include "modelzip/bridge/protocol.hpp"
#include "modelzip/bridge/transport.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace modelzip::bridge {

// Client side of one ordered request/response stream. Not thread-safe;
// open one session per worker.
class Session {
public:
    // Performs the hello handshake; rejects other protocol versions.
    explicit Session(std::unique_ptr<Transport> transport, std::string endpoint = {});
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    static std::unique_ptr<Session> open(const std::string& endpoint);

    [[nodiscard]] const SessionInfo& info() const noexcept { return info_; }
    [[nodiscard]] const std::string& endpoint() const noexcept { return endpoint_; }

    std::vector<Symbol> tokenize(std::string_view text);
    std::string detokenize(std::span<const Symbol> ids);
    // Checks the context limit (BOS included) before sending and the reply
    // shape after. Byte-alphabet requests need an advertised byte map.
    EvalResponse evaluate(const EvalRequest& request);
    // Sends bye; later calls fail. Idempotent.
    void close();

    // Raw exchange for conformance probes: sends `request` with the next seq
    // unless it already carries one, returns the reply without interpretation.
    Message exchange(Message request);

private:
    Message call(Message request);

    std::unique_ptr<Transport> transport_;
    std::string endpoint_;
    SessionInfo info_;
    std::uint64_t next_seq_ = 1;
    bool open_ = false;
};

SessionInfo open_session(const std::string& endpoint);

}  // namespace modelzip::bridge
