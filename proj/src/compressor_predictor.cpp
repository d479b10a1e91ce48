#include "modelzip/compressor_predictor.hpp"

#include "modelzip/baselines.hpp"
#include "modelzip/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace modelzip {

namespace {

double checked_length(const CodeLength& code_length, std::span<const std::uint8_t> bytes) {
    double l;
    try {
        l = code_length(bytes);
    } catch (const std::exception& e) {
        throw Error(std::string("compressor failed: ") + e.what(), ErrorKind::internal);
    }
    if (!std::isfinite(l)) throw Error("compressor returned a non-finite code length", ErrorKind::internal);
    return l;
}

}  // namespace

ModelOutput compressor_predictor(std::span<const std::uint8_t> prefix, const CodeLength& code_length) {
    const double base = checked_length(code_length, prefix);
    std::vector<std::uint8_t> extended(prefix.begin(), prefix.end());
    extended.push_back(0);
    std::vector<double> exponent(256);
    for (std::size_t b = 0; b < 256; ++b) {
        extended.back() = static_cast<std::uint8_t>(b);
        exponent[b] = base - checked_length(code_length, extended);
    }
    const double peak = *std::max_element(exponent.begin(), exponent.end());
    double sum = 0.0;
    for (double e : exponent) sum += std::exp2(e - peak);
    const double log_norm = peak + std::log2(sum);
    for (auto& e : exponent) e -= log_norm;
    ModelOutput out;
    out.log2_probs = std::move(exponent);
    return out;
}

CompressorPredictorModel::CompressorPredictorModel(CodeLength code_length, std::string name)
    : code_length_(std::move(code_length)), name_(std::move(name)) {
    if (!code_length_) throw InvalidArgument("compressor predictor needs a code length function");
}

std::unique_ptr<Model> CompressorPredictorModel::clone() const {
    auto m = std::make_unique<CompressorPredictorModel>(code_length_, name_);
    m->set_capacity(capacity());
    return m;
}

void CompressorPredictorModel::compute() const {
    if (valid_) return;
    const auto& history = context().symbols_so_far;
    std::vector<std::uint8_t> prefix(history.begin(), history.end());
    log2_probs_ = *compressor_predictor(prefix, code_length_).log2_probs;
    valid_ = true;
}

void CompressorPredictorModel::probabilities(std::span<double> out) const {
    compute();
    for (std::size_t i = 0; i < 256; ++i) out[i] = std::exp2(log2_probs_[i]);
}

double CompressorPredictorModel::log2_prob(Symbol s) const {
    compute();
    return log2_probs_.at(s);
}

std::unique_ptr<CompressorPredictorModel> make_deflate_predictor() {
    return std::make_unique<CompressorPredictorModel>(
        [](std::span<const std::uint8_t> bytes) { return 8.0 * static_cast<double>(deflate_len(bytes)); },
        "deflate-predictor");
}

}  // namespace modelzip
