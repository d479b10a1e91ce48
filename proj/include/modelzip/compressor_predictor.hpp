#pragma once

#include "modelzip/model.hpp"

#include <cstdint>
#include <functional>
#include <span>

namespace modelzip {

// Code length in bits of a byte string under some compressor.
using CodeLength = std::function<double(std::span<const std::uint8_t>)>;

// Next-byte distribution derived from incremental code lengths:
// P(b | prefix) proportional to 2^(l(prefix) - l(prefix . b)), over all 256 b.
// Costs 257 calls to `code_length`.
ModelOutput compressor_predictor(std::span<const std::uint8_t> prefix, const CodeLength& code_length);

// The same as a sequential model over bytes. The prefix is the current chunk.
class CompressorPredictorModel final : public Model {
public:
    CompressorPredictorModel(CodeLength code_length, std::string name);

    [[nodiscard]] std::string id() const override { return name_; }
    [[nodiscard]] std::size_t alphabet_size() const override { return 256; }
    [[nodiscard]] std::unique_ptr<Model> clone() const override;
    void probabilities(std::span<double> out) const override;
    [[nodiscard]] double log2_prob(Symbol s) const override;

protected:
    void on_reset() override { valid_ = false; }
    void on_update(Symbol) override { valid_ = false; }

private:
    void compute() const;

    CodeLength code_length_;
    std::string name_;
    mutable std::vector<double> log2_probs_;
    mutable bool valid_ = false;
};

// Raw-deflate code lengths (8 bits per compressed byte) as a predictor.
std::unique_ptr<CompressorPredictorModel> make_deflate_predictor();

}  // namespace modelzip
