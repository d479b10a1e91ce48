#pragma once

#include "modelzip/quantized_pmf.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace modelzip {

class Model;

struct CoderConfig {
    int register_width = kDefaultRegisterWidth;
    int precision = kDefaultPrecision;

    void validate() const;
};

// One arithmetic-coded chunk. ceil(bit_length / 8) == payload.size().
struct ChunkFrame {
    std::uint32_t symbol_count = 0;
    std::uint32_t bit_length = 0;
    std::vector<std::uint8_t> payload;

    friend bool operator==(const ChunkFrame&, const ChunkFrame&) = default;
};

// Supplies the quantized distribution of the next symbol and learns the
// realized one. Encoder and decoder must see identical sequences of tables.
class PmfSource {
public:
    virtual ~PmfSource() = default;
    virtual const QuantizedPmf& next_pmf() = 0;
    virtual void advance(Symbol s) = 0;
};

// Drives a Model at a fixed precision. Does not reset the model.
class ModelPmfSource final : public PmfSource {
public:
    ModelPmfSource(Model& model, int precision) : model_(model), precision_(precision) {}
    const QuantizedPmf& next_pmf() override;
    void advance(Symbol s) override;

private:
    Model& model_;
    int precision_;
    QuantizedPmf pmf_;
};

// Replays precomputed tables, one per position.
class ReplayPmfSource final : public PmfSource {
public:
    explicit ReplayPmfSource(std::span<const QuantizedPmf> rows) : rows_(rows) {}
    const QuantizedPmf& next_pmf() override;
    void advance(Symbol) override { ++position_; }

private:
    std::span<const QuantizedPmf> rows_;
    std::size_t position_ = 0;
};

// Integer arithmetic encoder with low/high registers of `register_width`
// bits and pending (underflow) bits resolved at the 1/4, 1/2, 3/4 points.
class ArithmeticEncoder {
public:
    explicit ArithmeticEncoder(int register_width = kDefaultRegisterWidth);

    void encode(const QuantizedPmf& pmf, Symbol s);
    // Emits the pending bits plus one disambiguation bit. The frame ends up
    // exactly (renormalization shifts + 2) bits long.
    ChunkFrame finish(std::uint32_t symbol_count);

private:
    void emit(unsigned bit);
    void emit_with_pending(unsigned bit);

    std::uint64_t low_ = 0;
    std::uint64_t high_;
    std::uint64_t half_, quarter_;
    std::uint64_t pending_ = 0;
    std::vector<std::uint8_t> bytes_;
    std::uint64_t bit_count_ = 0;
};

class ArithmeticDecoder {
public:
    ArithmeticDecoder(const ChunkFrame& frame, int register_width = kDefaultRegisterWidth);

    // Decodes symbol number `index` (only used in error messages).
    Symbol decode(const QuantizedPmf& pmf, std::size_t index);
    // Checks the shift count against the frame length once all symbols are read.
    void finish(std::size_t symbols_decoded) const;

private:
    unsigned next_bit(std::size_t index);

    const ChunkFrame& frame_;
    std::uint64_t low_ = 0;
    std::uint64_t high_;
    std::uint64_t code_ = 0;
    std::uint64_t half_, quarter_;
    std::uint64_t bit_pos_ = 0;
    std::uint64_t shifts_ = 0;
    std::uint64_t available_bits_;
};

struct CodingStats {
    // Sum over coded symbols of -log2 q(x_i) for the tables actually used.
    double ideal_bits = 0.0;
};

ChunkFrame encode_symbols(std::span<const Symbol> symbols, PmfSource& source, const CoderConfig& config,
                          CodingStats* stats = nullptr);
std::vector<Symbol> decode_symbols(const ChunkFrame& frame, PmfSource& source, const CoderConfig& config);

// Resets the model, then codes the chunk under it.
ChunkFrame encode_chunk(std::span<const Symbol> symbols, Model& model, const CoderConfig& config = {},
                        CodingStats* stats = nullptr);
std::vector<Symbol> decode_chunk(const ChunkFrame& frame, Model& model, const CoderConfig& config = {});

}  // namespace modelzip
