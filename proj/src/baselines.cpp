#include "modelzip/baselines.hpp"

#include "modelzip/error.hpp"

#include <zlib.h>

namespace modelzip {

namespace {

// window_bits: -15 raw deflate, 15 + 16 gzip.
std::vector<std::uint8_t> run_deflate(std::span<const std::uint8_t> bytes, int level, int window_bits) {
    if (level < 0 || level > 9) throw InvalidArgument("deflate level must be in [0, 9]");
    z_stream zs{};
    if (deflateInit2(&zs, level, Z_DEFLATED, window_bits, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw Error("deflateInit2 failed", ErrorKind::internal);
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(bytes.size())) + 32);
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = deflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw Error("deflate did not finish", ErrorKind::internal);
    out.resize(produced);
    return out;
}

}  // namespace

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> bytes, int level) {
    return run_deflate(bytes, level, -15);
}

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes, int level) {
    return run_deflate(bytes, level, 15 + 16);
}

std::size_t deflate_len(std::span<const std::uint8_t> bytes, int level) { return deflate_raw(bytes, level).size(); }

double deflate_rate(std::span<const std::uint8_t> bytes, int level) {
    if (bytes.empty()) throw InvalidArgument("deflate rate of empty input is undefined");
    return static_cast<double>(deflate_len(bytes, level)) / static_cast<double>(bytes.size());
}

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> compressed, std::size_t expected_size) {
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK) throw Error("inflateInit2 failed", ErrorKind::internal);
    std::vector<std::uint8_t> out(expected_size + 1);
    zs.next_in = const_cast<Bytef*>(compressed.data());
    zs.avail_in = static_cast<uInt>(compressed.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) throw FormatError("inflate failed");
    out.resize(produced);
    return out;
}

}  // namespace modelzip
