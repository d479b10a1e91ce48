#include "modelzip/arithmetic_coder.hpp"

#include "modelzip/error.hpp"
#include "modelzip/model.hpp"

#include <string>

namespace modelzip {

namespace {

// O(1) sanity checks on a model-supplied table; a full validate() per step
// would double the coding cost.
void check_table(const QuantizedPmf& pmf, const CoderConfig& config, std::size_t index) {
    const auto cum = pmf.cumulative();
    if (pmf.precision() != config.precision)
        throw InvalidArgument("model produced precision " + std::to_string(pmf.precision()) + ", expected " +
                              std::to_string(config.precision));
    if (cum.size() < 3 || cum.front() != 0 || cum.back() != pmf.total())
        throw InvalidArgument("model returned an invalid distribution at position " + std::to_string(index));
}

}  // namespace

void CoderConfig::validate() const {
    if (register_width < 4 || register_width > 32)
        throw InvalidArgument("register width must be in [4, 32], got " + std::to_string(register_width));
    if (precision < 1 || precision > register_width - 2)
        throw InvalidArgument("precision must be in [1, register_width - 2], got " + std::to_string(precision));
}

const QuantizedPmf& ModelPmfSource::next_pmf() {
    model_.quantized(precision_, pmf_);
    return pmf_;
}

void ModelPmfSource::advance(Symbol s) { model_.update(s); }

const QuantizedPmf& ReplayPmfSource::next_pmf() {
    if (position_ >= rows_.size()) throw CodecError("no probability table for position", position_);
    return rows_[position_];
}

ArithmeticEncoder::ArithmeticEncoder(int register_width)
    : high_((std::uint64_t{1} << register_width) - 1),
      half_(std::uint64_t{1} << (register_width - 1)),
      quarter_(std::uint64_t{1} << (register_width - 2)) {}

void ArithmeticEncoder::emit(unsigned bit) {
    if (bit_count_ % 8 == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bit_count_ % 8));
    ++bit_count_;
}

void ArithmeticEncoder::emit_with_pending(unsigned bit) {
    emit(bit);
    for (; pending_ > 0; --pending_) emit(bit ^ 1u);
}

void ArithmeticEncoder::encode(const QuantizedPmf& pmf, Symbol s) {
    const int shift = pmf.precision();
    const std::uint64_t range = high_ - low_ + 1;
    high_ = low_ + ((range * pmf.high(s)) >> shift) - 1;
    low_ = low_ + ((range * pmf.low(s)) >> shift);
    for (;;) {
        if (high_ < half_) {
            emit_with_pending(0);
        } else if (low_ >= half_) {
            emit_with_pending(1);
            low_ -= half_;
            high_ -= half_;
        } else if (low_ >= quarter_ && high_ < half_ + quarter_) {
            ++pending_;
            low_ -= quarter_;
            high_ -= quarter_;
        } else {
            break;
        }
        low_ <<= 1;
        high_ = (high_ << 1) | 1;
    }
}

ChunkFrame ArithmeticEncoder::finish(std::uint32_t symbol_count) {
    ++pending_;
    emit_with_pending(low_ < quarter_ ? 0 : 1);
    ChunkFrame frame;
    frame.symbol_count = symbol_count;
    frame.bit_length = static_cast<std::uint32_t>(bit_count_);
    frame.payload = std::move(bytes_);
    bytes_.clear();
    return frame;
}

ArithmeticDecoder::ArithmeticDecoder(const ChunkFrame& frame, int register_width)
    : frame_(frame),
      high_((std::uint64_t{1} << register_width) - 1),
      half_(std::uint64_t{1} << (register_width - 1)),
      quarter_(std::uint64_t{1} << (register_width - 2)),
      available_bits_(std::uint64_t{8} * frame.payload.size()) {
    if (frame.payload.size() > (std::uint64_t{frame.bit_length} + 7) / 8)
        throw FormatError("frame payload longer than its bit length");
    for (int i = 0; i < register_width; ++i) code_ = (code_ << 1) | next_bit(0);
}

unsigned ArithmeticDecoder::next_bit(std::size_t index) {
    const std::uint64_t pos = bit_pos_++;
    // Bits past the end of the code are implicit zeros.
    if (pos >= frame_.bit_length) return 0;
    if (pos >= available_bits_)
        throw CodecError("payload truncated: bit " + std::to_string(pos) + " of " +
                             std::to_string(frame_.bit_length) + " missing while decoding symbol " +
                             std::to_string(index),
                         index);
    return (frame_.payload[pos / 8] >> (7 - pos % 8)) & 1u;
}

Symbol ArithmeticDecoder::decode(const QuantizedPmf& pmf, std::size_t index) {
    const int shift = pmf.precision();
    const std::uint64_t range = high_ - low_ + 1;
    if (code_ < low_ || code_ > high_)
        throw CodecError("code value left the coding interval at symbol " + std::to_string(index), index);
    const std::uint64_t target = (((code_ - low_ + 1) << shift) - 1) / range;
    if (target >= pmf.total())
        throw CodecError("code value outside the distribution at symbol " + std::to_string(index), index);
    const Symbol s = pmf.find(static_cast<std::uint32_t>(target));
    if (pmf.high(s) <= pmf.low(s) || pmf.low(s) > target)
        throw CodecError("invalid distribution at symbol " + std::to_string(index), index);
    high_ = low_ + ((range * pmf.high(s)) >> shift) - 1;
    low_ = low_ + ((range * pmf.low(s)) >> shift);
    for (;;) {
        if (high_ < half_) {
            // nothing to subtract
        } else if (low_ >= half_) {
            low_ -= half_;
            high_ -= half_;
            code_ -= half_;
        } else if (low_ >= quarter_ && high_ < half_ + quarter_) {
            low_ -= quarter_;
            high_ -= quarter_;
            code_ -= quarter_;
        } else {
            break;
        }
        low_ <<= 1;
        high_ = (high_ << 1) | 1;
        code_ = (code_ << 1) | next_bit(index);
        ++shifts_;
    }
    // The encoder wrote exactly shifts + 2 bits; outrunning that means the
    // tables differ from the ones used for encoding.
    if (shifts_ + 2 > frame_.bit_length)
        throw CodecError("coding interval exhausted at symbol " + std::to_string(index) +
                             " (model mismatch or corrupt payload)",
                         index);
    return s;
}

void ArithmeticDecoder::finish(std::size_t symbols_decoded) const {
    if (shifts_ + 2 != frame_.bit_length)
        throw CodecError("frame length mismatch after " + std::to_string(symbols_decoded) +
                             " symbols (model mismatch or corrupt payload)",
                         symbols_decoded == 0 ? 0 : symbols_decoded - 1);
}

ChunkFrame encode_symbols(std::span<const Symbol> symbols, PmfSource& source, const CoderConfig& config,
                          CodingStats* stats) {
    config.validate();
    if (symbols.empty()) throw InvalidArgument("cannot encode an empty chunk");
    if (symbols.size() > UINT32_MAX) throw InvalidArgument("chunk too long");
    ArithmeticEncoder encoder(config.register_width);
    double ideal = 0.0;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        const Symbol s = symbols[i];
        const QuantizedPmf& pmf = source.next_pmf();
        check_table(pmf, config, i);
        if (s >= pmf.alphabet_size())
            throw InvalidArgument("symbol " + std::to_string(s) + " outside alphabet of " +
                                  std::to_string(pmf.alphabet_size()));
        if (pmf.high(s) <= pmf.low(s))
            throw InvalidArgument("model assigned zero frequency to symbol " + std::to_string(s) + " at position " +
                                  std::to_string(i));
        if (stats) ideal += pmf.bits(s);
        encoder.encode(pmf, s);
        source.advance(s);
    }
    if (stats) stats->ideal_bits = ideal;
    return encoder.finish(static_cast<std::uint32_t>(symbols.size()));
}

std::vector<Symbol> decode_symbols(const ChunkFrame& frame, PmfSource& source, const CoderConfig& config) {
    config.validate();
    if (frame.symbol_count == 0) throw FormatError("frame has no symbols");
    ArithmeticDecoder decoder(frame, config.register_width);
    std::vector<Symbol> out;
    out.reserve(frame.symbol_count);
    for (std::size_t i = 0; i < frame.symbol_count; ++i) {
        const QuantizedPmf& pmf = source.next_pmf();
        check_table(pmf, config, i);
        Symbol s = decoder.decode(pmf, i);
        out.push_back(s);
        source.advance(s);
    }
    decoder.finish(out.size());
    return out;
}

ChunkFrame encode_chunk(std::span<const Symbol> symbols, Model& model, const CoderConfig& config,
                        CodingStats* stats) {
    model.reset();
    ModelPmfSource source(model, config.precision);
    return encode_symbols(symbols, source, config, stats);
}

std::vector<Symbol> decode_chunk(const ChunkFrame& frame, Model& model, const CoderConfig& config) {
    model.reset();
    ModelPmfSource source(model, config.precision);
    return decode_symbols(frame, source, config);
}

}  // namespace modelzip
