#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace modelzip {

inline constexpr int kDefaultDeflateLevel = 9;

// gzip wraps the raw deflate stream in a 10-byte header and an 8-byte
// CRC32/size trailer (no optional fields).
inline constexpr std::size_t kGzipContainerOverhead = 18;

// Length in bytes of the raw deflate stream (no zlib/gzip framing).
std::size_t deflate_len(std::span<const std::uint8_t> bytes, int level = kDefaultDeflateLevel);
// deflate_len / raw size. Requires non-empty input.
double deflate_rate(std::span<const std::uint8_t> bytes, int level = kDefaultDeflateLevel);

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> bytes, int level = kDefaultDeflateLevel);
std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> compressed, std::size_t expected_size);
// Full gzip member, container included.
std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes, int level = kDefaultDeflateLevel);

}  // namespace modelzip
