#include "vex/hash.hpp"

#include <sodium.h>

namespace vex {

Hash32 sha256(ByteView data) {
    Hash32 out{};
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

Hash32 sha256(const Bytes& data) { return sha256(as_view(data)); }

unsigned leading_zero_bits(const Hash32& digest) {
    unsigned bits = 0;
    for (std::uint8_t b : digest) {
        if (b == 0) {
            bits += 8;
            continue;
        }
        for (int i = 7; i >= 0; --i) {
            if (b & (1u << i)) {
                return bits;
            }
            ++bits;
        }
    }
    return bits;
}

std::string short_digest(const Hash32& digest) {
    return hex_encode(ByteView{digest.data(), 8});
}

}  // namespace vex
