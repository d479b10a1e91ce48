#include "modelzip/bridge/bridge_scorer.hpp"

#include "modelzip/error.hpp"

#include <algorithm>
#include <string_view>

namespace modelzip::bridge {

BridgeScorer::BridgeScorer(std::string endpoint) : endpoint_(std::move(endpoint)), session_(Session::open(endpoint_)) {}

std::unique_ptr<Scorer> BridgeScorer::fork() const { return std::make_unique<BridgeScorer>(endpoint_); }

std::vector<Symbol> BridgeScorer::symbols(const Document& doc, Domain domain) {
    domain_ = domain;
    if (domain == Domain::bytes) {
        if (!session_->info().byte_token_map)
            throw InvalidArgument("model " + name() + " reserves no byte tokens; document " + doc.doc_id +
                                  " cannot be evaluated in the byte domain");
        return {doc.bytes.begin(), doc.bytes.end()};
    }
    if (doc.modality != Modality::text)
        throw InvalidArgument("byte document " + doc.doc_id + " needs the bytes domain");
    const std::string_view text(reinterpret_cast<const char*>(doc.bytes.data()), doc.bytes.size());
    auto ids = session_->tokenize(text);
    const auto back = session_->detokenize(ids);
    if (back != text) {
        const auto diff = std::mismatch(back.begin(), back.end(), text.begin(), text.end());
        throw TokenizationMismatch("document " + doc.doc_id + ": detokenized text differs from the source at byte " +
                                   std::to_string(diff.second - text.begin()));
    }
    if (ids.empty()) throw TokenizationMismatch("document " + doc.doc_id + ": tokenizer returned no tokens");
    return ids;
}

EvalRequest BridgeScorer::request_for(std::span<const Symbol> window, std::size_t score_begin, OutputMode mode) const {
    EvalRequest r;
    r.mode = mode;
    r.score_from = score_begin;
    if (domain_ == Domain::bytes) {
        const auto& map = *session_->info().byte_token_map;
        r.alphabet = Alphabet::bytes;
        r.tokens.reserve(window.size());
        for (Symbol b : window) r.tokens.push_back(map.token(static_cast<std::uint8_t>(b)));
    } else {
        r.alphabet = Alphabet::vocab;
        r.tokens.assign(window.begin(), window.end());
    }
    return r;
}

std::vector<double> BridgeScorer::score_window(std::span<const Symbol> window, std::size_t score_begin) {
    return session_->evaluate(request_for(window, score_begin, OutputMode::metrics)).log2_probs;
}

ChunkFrame BridgeScorer::code_window(std::span<const Symbol> window, std::size_t score_begin, const CoderConfig& config) {
    auto request = request_for(window, score_begin, OutputMode::codec);
    request.precision = config.precision;
    const auto response = session_->evaluate(request);
    const auto scored = window.subspan(score_begin);
    ReplayPmfSource enc(response.pmfs);
    ChunkFrame frame = encode_symbols(scored, enc, config);
    ReplayPmfSource dec(response.pmfs);
    const auto decoded = decode_symbols(frame, dec, config);
    if (!std::equal(decoded.begin(), decoded.end(), scored.begin(), scored.end()))
        throw IntegrityError("arithmetic-code round trip failed under sidecar PMFs from " + name());
    return frame;
}

}  // namespace modelzip::bridge
