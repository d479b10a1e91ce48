#pragma once

#include "modelzip/arithmetic_coder.hpp"
#include "modelzip/corpus.hpp"
#include "modelzip/error.hpp"
#include "modelzip/model.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace modelzip {

enum class EvalMode { chunked, sliding };
enum class Domain { text_tokens, bytes };

std::string_view to_string(EvalMode m);
EvalMode parse_eval_mode(std::string_view s);
std::string_view to_string(Domain d);
Domain parse_domain(std::string_view s);

struct EvalConfig {
    std::size_t context = 2048;
    EvalMode mode = EvalMode::chunked;
    std::size_t step = 512;  // sliding only
    // Unset: text documents use text_tokens, byte documents use bytes.
    std::optional<Domain> domain;
    int precision = kDefaultPrecision;
    int register_width = kDefaultRegisterWidth;
    bool physical = false;

    // Chunked mode behaves as sliding with step == context.
    [[nodiscard]] std::size_t effective_step() const noexcept { return mode == EvalMode::chunked ? context : step; }
    void validate() const;
};

// Positions [begin, end) are fed to the model; [score_begin, end) are scored.
struct Window {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t score_begin = 0;

    friend bool operator==(const Window&, const Window&) = default;
};

// Chunked: disjoint windows of `context`, fully scored. Sliding: the first
// window [0, min(C, n)) is fully scored, then windows start every `step`
// positions and score only their final `step` positions (fewer at the
// tail). Every position is scored exactly once.
std::vector<Window> make_windows(std::size_t n, const EvalConfig& config);

// L = -sum of log2 probabilities, in bits. Rejects non-finite or positive input.
double total_bits(std::span<const double> log2_probs);

struct MetricsReport {
    double total_bits = 0.0;
    std::size_t n_tokens = 0;
    std::size_t n_chars = 0;
    std::size_t n_bytes = 0;
    double bpt = 0.0;
    double bpc = 0.0;
    double bpb = 0.0;
    double rate = 0.0;
    std::optional<std::size_t> payload_bytes;
};

// Derives bpt/bpc/bpb and the rate: payload_bytes / n_bytes when a
// payload was produced, else L / (8 n_bytes).
MetricsReport make_report(double total_bits, std::size_t n_tokens, std::size_t n_chars, std::size_t n_bytes,
                          std::optional<std::size_t> payload_bytes = {});

// Sums several reports (e.g. one month of documents). The payload is kept
// only if every input has one.
MetricsReport aggregate(std::span<const MetricsReport> reports);

// Anything that assigns next-symbol probabilities to a document's symbols.
class Scorer {
public:
    virtual ~Scorer() = default;

    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual std::string bos_policy() const { return "none"; }
    // Independent scorer for another worker thread.
    [[nodiscard]] virtual std::unique_ptr<Scorer> fork() const = 0;

    // Symbol sequence of the document in `domain`. Throws TokenizationMismatch
    // when the tokenizer cannot reproduce the text.
    virtual std::vector<Symbol> symbols(const Document& doc, Domain domain) = 0;
    // log2 P(x_j | window[0..j)) for j in [score_begin, window.size()).
    virtual std::vector<double> score_window(std::span<const Symbol> window, std::size_t score_begin) = 0;
    // Arithmetic-codes the scored part of the window and verifies the round trip.
    virtual ChunkFrame code_window(std::span<const Symbol> window, std::size_t score_begin,
                                   const CoderConfig& config) = 0;
};

class TokenizationMismatch : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* name() const noexcept override { return "tokenization_mismatch"; }
};

// In-process byte model.
class ModelScorer final : public Scorer {
public:
    explicit ModelScorer(std::unique_ptr<Model> model);

    [[nodiscard]] std::string name() const override { return model_->id(); }
    [[nodiscard]] std::unique_ptr<Scorer> fork() const override;
    std::vector<Symbol> symbols(const Document& doc, Domain domain) override;
    std::vector<double> score_window(std::span<const Symbol> window, std::size_t score_begin) override;
    ChunkFrame code_window(std::span<const Symbol> window, std::size_t score_begin, const CoderConfig& config) override;

private:
    void prime(std::span<const Symbol> context);

    std::unique_ptr<Model> model_;
};

struct DocumentOutcome {
    std::string doc_id;
    std::optional<MetricsReport> report;  // empty when skipped
    std::string skip_reason;
};

// Characters are Unicode scalar values for text and bytes for byte documents.
// Failures other than tokenization mismatches surface as DocumentError.
DocumentOutcome evaluate_document(const Document& doc, Scorer& scorer, const EvalConfig& config);

}  // namespace modelzip
