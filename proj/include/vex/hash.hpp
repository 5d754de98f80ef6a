#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "vex/bytes.hpp"

namespace vex {

using Hash32 = std::array<std::uint8_t, 32>;

Hash32 sha256(ByteView data);
Hash32 sha256(const Bytes& data);

// Number of leading zero bits; 256 for the all-zero digest.
unsigned leading_zero_bits(const Hash32& digest);

// First 8 bytes as lowercase hex, used for trace lines and logs.
std::string short_digest(const Hash32& digest);

}  // namespace vex
