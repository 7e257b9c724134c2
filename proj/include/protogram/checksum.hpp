#pragma once

#include <cstdint>
#include <span>

namespace protogram {

// Ones-complement of the ones-complement sum of big-endian 16-bit words.
// An odd trailing byte is padded with zero.
std::uint16_t internet_checksum(std::span<const std::uint8_t> bytes);

}  // namespace protogram
