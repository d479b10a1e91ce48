#include "modelzip/archive.hpp"

#include "modelzip/error.hpp"
#include "modelzip/model.hpp"

#include <algorithm>
#include <cstring>

namespace modelzip {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { out.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void bytes(std::span<const std::uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); }

    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        if (in_.size() - pos_ < n)
            throw FormatError(std::string("archive truncated while reading ") + what);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8(const char* what) { return take(1, what)[0]; }
    std::uint16_t u16(const char* what) {
        auto b = take(2, what);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32(const char* what) {
        auto b = take(4, what);
        return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
               (std::uint32_t{b[3]} << 24);
    }
    [[nodiscard]] bool done() const { return pos_ == in_.size(); }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t Archive::payload_bytes() const noexcept {
    std::size_t n = 0;
    for (const auto& c : chunks) n += c.payload.size();
    return n;
}

std::size_t Archive::symbol_count() const noexcept {
    std::size_t n = 0;
    for (const auto& c : chunks) n += c.symbol_count;
    return n;
}

std::vector<std::uint8_t> serialize_archive(const Archive& archive) {
    if (archive.model_id.size() > UINT16_MAX) throw InvalidArgument("model id too long");
    if (archive.chunks.size() > UINT32_MAX) throw InvalidArgument("too many chunks");
    Writer w;
    for (char c : Archive::kMagic) w.u8(static_cast<std::uint8_t>(c));
    w.u8(archive.version);
    w.u8(archive.register_width);
    w.u8(archive.precision);
    w.u32(archive.alphabet_size);
    w.u16(static_cast<std::uint16_t>(archive.model_id.size()));
    w.bytes({reinterpret_cast<const std::uint8_t*>(archive.model_id.data()), archive.model_id.size()});
    w.u32(static_cast<std::uint32_t>(archive.chunks.size()));
    for (const auto& c : archive.chunks) {
        if (c.payload.size() != (std::size_t{c.bit_length} + 7) / 8)
            throw InvalidArgument("chunk payload size does not match its bit length");
        w.u32(c.symbol_count);
        w.u32(c.bit_length);
        w.bytes(c.payload);
    }
    return std::move(w.out);
}

Archive parse_archive(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    auto magic = r.take(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), Archive::kMagic.begin(),
                    [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); }))
        throw FormatError("not an archive: bad magic");
    Archive a;
    a.version = r.u8("version");
    if (a.version != Archive::kVersion)
        throw FormatError("unsupported archive version " + std::to_string(a.version));
    a.register_width = r.u8("register width");
    a.precision = r.u8("precision");
    try {
        CoderConfig{a.register_width, a.precision}.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("archive header: ") + e.what());
    }
    a.alphabet_size = r.u32("alphabet size");
    auto id_len = r.u16("model id length");
    auto id = r.take(id_len, "model id");
    a.model_id.assign(id.begin(), id.end());
    auto count = r.u32("chunk count");
    for (std::uint32_t i = 0; i < count; ++i) {
        ChunkFrame f;
        f.symbol_count = r.u32("chunk symbol count");
        f.bit_length = r.u32("chunk bit length");
        if (f.symbol_count == 0) throw FormatError("chunk " + std::to_string(i) + " has no symbols");
        auto payload = r.take((std::size_t{f.bit_length} + 7) / 8, "chunk payload");
        f.payload.assign(payload.begin(), payload.end());
        a.chunks.push_back(std::move(f));
    }
    if (!r.done()) throw FormatError("trailing bytes after the last chunk");
    return a;
}

Archive encode_stream(std::span<const Symbol> symbols, Model& model, std::size_t chunk_size,
                      const CoderConfig& config, StreamStats* stats) {
    if (chunk_size == 0) throw InvalidArgument("chunk size must be at least 1");
    config.validate();
    Archive a;
    a.register_width = static_cast<std::uint8_t>(config.register_width);
    a.precision = static_cast<std::uint8_t>(config.precision);
    a.alphabet_size = static_cast<std::uint32_t>(model.alphabet_size());
    a.model_id = model.id();
    if (stats) stats->ideal_bits.clear();
    for (std::size_t begin = 0, index = 0; begin < symbols.size(); begin += chunk_size, ++index) {
        auto chunk = symbols.subspan(begin, std::min(chunk_size, symbols.size() - begin));
        try {
            CodingStats cs;
            a.chunks.push_back(encode_chunk(chunk, model, config, &cs));
            if (stats) stats->ideal_bits.push_back(cs.ideal_bits);
        } catch (const CodecError& e) {
            throw CodecError("chunk " + std::to_string(index) + ": " + e.what(), e.symbol_index(), index);
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("chunk " + std::to_string(index) + ": " + e.what());
        }
    }
    return a;
}

std::vector<Symbol> decode_stream(const Archive& archive, Model& model) {
    if (archive.alphabet_size != model.alphabet_size())
        throw InvalidArgument("archive alphabet " + std::to_string(archive.alphabet_size) +
                              " does not match model alphabet " + std::to_string(model.alphabet_size()));
    const CoderConfig config = archive.coder_config();
    std::vector<Symbol> out;
    out.reserve(archive.symbol_count());
    for (std::size_t i = 0; i < archive.chunks.size(); ++i) {
        try {
            auto part = decode_chunk(archive.chunks[i], model, config);
            out.insert(out.end(), part.begin(), part.end());
        } catch (const CodecError& e) {
            throw CodecError("chunk " + std::to_string(i) + ": " + e.what(), e.symbol_index(), i);
        }
    }
    return out;
}

}  // namespace modelzip
