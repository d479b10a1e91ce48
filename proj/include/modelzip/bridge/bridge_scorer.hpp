#pragma once

#include "modelzip/bridge/session.hpp"
#include "modelzip/harness.hpp"

#include <memory>
#include <string>

namespace modelzip::bridge {

// Scores documents through a sidecar session. Text is tokenized by the
// sidecar and must detokenize back to the same bytes; byte documents are
// sent as the advertised byte tokens and scored over the 256-byte alphabet.
class BridgeScorer final : public Scorer {
public:
    explicit BridgeScorer(std::string endpoint);

    [[nodiscard]] std::string name() const override { return session_->info().model_name; }
    [[nodiscard]] std::string bos_policy() const override { return std::string(to_string(session_->info().bos_policy)); }
    [[nodiscard]] std::unique_ptr<Scorer> fork() const override;
    std::vector<Symbol> symbols(const Document& doc, Domain domain) override;
    std::vector<double> score_window(std::span<const Symbol> window, std::size_t score_begin) override;
    ChunkFrame code_window(std::span<const Symbol> window, std::size_t score_begin, const CoderConfig& config) override;

    [[nodiscard]] Session& session() noexcept { return *session_; }

private:
    EvalRequest request_for(std::span<const Symbol> window, std::size_t score_begin, OutputMode mode) const;

    std::string endpoint_;
    std::unique_ptr<Session> session_;
    Domain domain_ = Domain::text_tokens;
};

}  // namespace modelzip::bridge
