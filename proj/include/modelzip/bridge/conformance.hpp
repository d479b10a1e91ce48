#pragma once

#include "modelzip/bridge/protocol.hpp"

#include <string>
#include <vector>

namespace modelzip::bridge {

struct ConformanceCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ConformanceReport {
    std::string endpoint;
    std::vector<ConformanceCheck> checks;

    [[nodiscard]] bool passed() const;
};

// Probes a sidecar for protocol v1 compliance: handshake and version
// rejection, seq handling, tokenization, metrics and codec replies,
// determinism, codec round trip through the coder, metrics/codec
// agreement, context overflow, byte-alphabet handling, error replies and
// shutdown. Opens several connections to `endpoint`.
ConformanceReport run_conformance(const std::string& endpoint);

// Fixed request lines (after the handshake) used to compare sidecar
// implementations byte for byte.
std::vector<std::string> fixture_requests();
// Reply lines for hello followed by fixture_requests().
std::vector<std::string> record_transcript(const std::string& endpoint);

}  // namespace modelzip::bridge
