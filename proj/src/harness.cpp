#include "modelzip/harness.hpp"

#include "modelzip/io.hpp"

#include <algorithm>
#include <cmath>

namespace modelzip {

std::string_view to_string(EvalMode m) { return m == EvalMode::chunked ? "chunked" : "sliding"; }

EvalMode parse_eval_mode(std::string_view s) {
    if (s == "chunked") return EvalMode::chunked;
    if (s == "sliding") return EvalMode::sliding;
    throw InvalidArgument("mode must be chunked or sliding, got '" + std::string(s) + "'");
}

std::string_view to_string(Domain d) { return d == Domain::text_tokens ? "text_tokens" : "bytes"; }

Domain parse_domain(std::string_view s) {
    if (s == "text_tokens" || s == "text") return Domain::text_tokens;
    if (s == "bytes") return Domain::bytes;
    throw InvalidArgument("domain must be text_tokens or bytes, got '" + std::string(s) + "'");
}

void EvalConfig::validate() const {
    if (context < 1) throw InvalidArgument("context size must be at least 1");
    if (mode == EvalMode::sliding && (step < 1 || step > context))
        throw InvalidArgument("sliding step must be in [1, context]");
    CoderConfig{register_width, precision}.validate();
}

std::vector<Window> make_windows(std::size_t n, const EvalConfig& config) {
    config.validate();
    const std::size_t c = config.context;
    const std::size_t s = config.effective_step();
    std::vector<Window> out;
    if (n == 0) return out;
    out.push_back({0, std::min(c, n), 0});
    for (std::size_t start = s; start + c - s < n; start += s) {
        const std::size_t score_begin = start + c - s;
        out.push_back({start, std::min(start + c, n), score_begin});
    }
    return out;
}

double total_bits(std::span<const double> log2_probs) {
    double sum = 0.0;
    for (std::size_t i = 0; i < log2_probs.size(); ++i) {
        const double v = log2_probs[i];
        if (!std::isfinite(v) || v > 0.0)
            throw InvalidArgument("log2 probability at position " + std::to_string(i) + " is not a finite value <= 0");
        sum += v;
    }
    return -sum;
}

MetricsReport make_report(double bits, std::size_t n_tokens, std::size_t n_chars, std::size_t n_bytes,
                          std::optional<std::size_t> payload_bytes) {
    if (n_tokens == 0 || n_chars == 0 || n_bytes == 0) throw InvalidArgument("metrics need non-empty counts");
    MetricsReport r;
    r.total_bits = bits;
    r.n_tokens = n_tokens;
    r.n_chars = n_chars;
    r.n_bytes = n_bytes;
    r.bpt = bits / static_cast<double>(n_tokens);
    r.bpc = bits / static_cast<double>(n_chars);
    r.bpb = bits / static_cast<double>(n_bytes);
    r.payload_bytes = payload_bytes;
    r.rate = payload_bytes ? static_cast<double>(*payload_bytes) / static_cast<double>(n_bytes)
                           : bits / (8.0 * static_cast<double>(n_bytes));
    return r;
}

MetricsReport aggregate(std::span<const MetricsReport> reports) {
    if (reports.empty()) throw InvalidArgument("nothing to aggregate");
    double bits = 0.0;
    std::size_t tokens = 0, chars = 0, bytes = 0, payload = 0;
    bool physical = true;
    for (const auto& r : reports) {
        bits += r.total_bits;
        tokens += r.n_tokens;
        chars += r.n_chars;
        bytes += r.n_bytes;
        if (r.payload_bytes)
            payload += *r.payload_bytes;
        else
            physical = false;
    }
    return make_report(bits, tokens, chars, bytes, physical ? std::optional(payload) : std::nullopt);
}

ModelScorer::ModelScorer(std::unique_ptr<Model> model) : model_(std::move(model)) {
    if (!model_) throw InvalidArgument("model scorer needs a model");
    // Built-in models read raw bytes in both domains.
    if (model_->alphabet_size() != 256)
        throw InvalidArgument("model " + model_->id() + " does not cover the 256 byte values");
}

std::unique_ptr<Scorer> ModelScorer::fork() const { return std::make_unique<ModelScorer>(model_->clone()); }

std::vector<Symbol> ModelScorer::symbols(const Document& doc, Domain) {
    return {doc.bytes.begin(), doc.bytes.end()};
}

void ModelScorer::prime(std::span<const Symbol> context) {
    model_->reset();
    for (Symbol s : context) model_->update(s);
}

std::vector<double> ModelScorer::score_window(std::span<const Symbol> window, std::size_t score_begin) {
    prime(window.first(score_begin));
    std::vector<double> out;
    out.reserve(window.size() - score_begin);
    for (std::size_t i = score_begin; i < window.size(); ++i) {
        out.push_back(model_->log2_prob(window[i]));
        model_->update(window[i]);
    }
    return out;
}

ChunkFrame ModelScorer::code_window(std::span<const Symbol> window, std::size_t score_begin, const CoderConfig& config) {
    const auto scored = window.subspan(score_begin);
    prime(window.first(score_begin));
    ModelPmfSource enc_source(*model_, config.precision);
    ChunkFrame frame = encode_symbols(scored, enc_source, config);
    prime(window.first(score_begin));
    ModelPmfSource dec_source(*model_, config.precision);
    auto decoded = decode_symbols(frame, dec_source, config);
    if (!std::equal(decoded.begin(), decoded.end(), scored.begin(), scored.end()))
        throw IntegrityError("arithmetic-code round trip failed under model " + model_->id());
    return frame;
}

namespace {

DocumentOutcome evaluate_unchecked(const Document& doc, Scorer& scorer, const EvalConfig& config) {
    if (doc.bytes.empty()) throw InvalidArgument("document " + doc.doc_id + " is empty");
    const Domain domain = config.domain.value_or(doc.modality == Modality::text ? Domain::text_tokens : Domain::bytes);
    DocumentOutcome outcome;
    outcome.doc_id = doc.doc_id;
    std::vector<Symbol> symbols;
    try {
        symbols = scorer.symbols(doc, domain);
    } catch (const TokenizationMismatch& e) {
        outcome.skip_reason = e.what();
        return outcome;
    }
    if (symbols.empty()) throw InvalidArgument("document " + doc.doc_id + " produced no symbols");

    const auto windows = make_windows(symbols.size(), config);
    const CoderConfig coder{config.register_width, config.precision};
    std::vector<double> log2_probs;
    log2_probs.reserve(symbols.size());
    std::size_t payload = 0;
    for (const auto& w : windows) {
        const auto window = std::span(symbols).subspan(w.begin, w.end - w.begin);
        auto scored = scorer.score_window(window, w.score_begin - w.begin);
        if (scored.size() != w.end - w.score_begin)
            throw Error("scorer returned " + std::to_string(scored.size()) + " values for " +
                            std::to_string(w.end - w.score_begin) + " positions",
                        ErrorKind::internal);
        log2_probs.insert(log2_probs.end(), scored.begin(), scored.end());
        if (config.physical) payload += scorer.code_window(window, w.score_begin - w.begin, coder).payload.size();
    }
    const std::size_t n_bytes = doc.bytes.size();
    const std::size_t n_chars = doc.modality == Modality::text ? count_scalar_values(doc.bytes) : n_bytes;
    outcome.report = make_report(total_bits(log2_probs), symbols.size(), n_chars, n_bytes,
                                 config.physical ? std::optional(payload) : std::nullopt);
    return outcome;
}

}  // namespace

DocumentOutcome evaluate_document(const Document& doc, Scorer& scorer, const EvalConfig& config) {
    config.validate();
    try {
        return evaluate_unchecked(doc, scorer, config);
    } catch (const DocumentError&) {
        throw;
    } catch (const Error& e) {
        throw DocumentError(doc.doc_id, e);
    }
}

}  // namespace modelzip
