#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vex {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_view(const Bytes& b) { return ByteView{b.data(), b.size()}; }

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

std::string hex_encode(ByteView data);
std::optional<Bytes> hex_decode(std::string_view hex);

template <std::size_t N>
std::optional<std::array<std::uint8_t, N>> hex_decode_fixed(std::string_view hex) {
    auto raw = hex_decode(hex);
    if (!raw || raw->size() != N) {
        return std::nullopt;
    }
    std::array<std::uint8_t, N> out{};
    std::copy(raw->begin(), raw->end(), out.begin());
    return out;
}

template <std::size_t N>
std::string hex_encode(const std::array<std::uint8_t, N>& data) {
    return hex_encode(ByteView{data.data(), data.size()});
}

// Append-only builder for the canonical encodings. All multi-byte integers
// are big-endian; variable-length fields are 4-byte length prefixed.
class Encoder {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }

    void u32be(std::uint32_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 24));
        out_.push_back(static_cast<std::uint8_t>(v >> 16));
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }

    void u64be(std::uint64_t v) {
        u32be(static_cast<std::uint32_t>(v >> 32));
        u32be(static_cast<std::uint32_t>(v));
    }

    void raw(ByteView data) { out_.insert(out_.end(), data.begin(), data.end()); }

    template <std::size_t N>
    void raw(const std::array<std::uint8_t, N>& data) {
        out_.insert(out_.end(), data.begin(), data.end());
    }

    void length_prefixed(ByteView data) {
        u32be(static_cast<std::uint32_t>(data.size()));
        raw(data);
    }

    void length_prefixed(std::string_view s) {
        u32be(static_cast<std::uint32_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }

    Bytes take() { return std::move(out_); }
    const Bytes& bytes() const { return out_; }

private:
    Bytes out_;
};

std::uint64_t read_u64be(ByteView data);

bool utf8_valid(std::string_view s);

}  // namespace vex
