#pragma once

#include "modelzip/bridge/protocol.hpp"
#include "modelzip/model.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace modelzip::bridge {

// Reference sidecar backed by an in-process byte model. Text is tokenized
// one UTF-8 byte per token; byte b becomes token b + offset.
struct MockConfig {
    std::string kind = "uniform";  // any byte-model spec accepted by make_model
    std::size_t vocab_size = 256;
    Symbol offset = 0;
    bool advertise_byte_map = true;
    // Non-ASCII bytes tokenize to '?', so such text does not round-trip.
    bool lossy = false;
    std::size_t context_limit = 4096;
    BosPolicy bos_policy = BosPolicy::none;
};

// "<kind>[,vocab=N][,offset=K][,no-byte-map][,lossy][,context=N][,bos]"
MockConfig parse_mock_config(std::string_view text);

// With a vocabulary larger than 256, byte tokens share 3/4 of the mass in
// proportion to the byte model and every other token gets an equal share
// of the remaining 1/4.
class MockSidecar {
public:
    explicit MockSidecar(MockConfig config);

    [[nodiscard]] const SessionInfo& info() const noexcept { return info_; }
    // One request line in, one reply line out (never throws for bad input).
    std::string handle(std::string_view line);
    // Serves requests until bye or end of input.
    void serve(int in_fd, int out_fd);
    [[nodiscard]] bool finished() const noexcept { return finished_; }

private:
    Message dispatch(const Message& request);
    Message evaluate(std::uint64_t seq, const EvalRequest& request);
    std::uint8_t byte_of(Symbol token) const;

    MockConfig config_;
    SessionInfo info_;
    std::unique_ptr<Model> model_;
    bool greeted_ = false;
    bool finished_ = false;
    std::optional<std::uint64_t> last_seq_;
};

}  // namespace modelzip::bridge
