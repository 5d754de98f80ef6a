#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "vex/bytes.hpp"
#include "vex/hash.hpp"
#include "vex/sig.hpp"

namespace vex {

using Nonce16 = std::array<std::uint8_t, 16>;

inline constexpr std::size_t kMaxUriBytes = 1024;
inline constexpr std::size_t kMaxPayloadBytes = 65536;

// Passing this as max_age disables the staleness check. Cacheable calls are
// verified with it; their reuse is bounded by the chain's history window
// instead of by response age.
inline constexpr std::uint64_t kNoMaxAge = UINT64_MAX;

struct OversizeField : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Freshness : std::uint8_t {
    Fresh = 0,               // per-call nonce, always invoked live, never cached
    CacheableIntraBlock = 1, // reusable within the block being built
    CacheableHistorical = 2, // additionally reusable from recent blocks' caches
};

const char* to_string(Freshness f);

struct ExternalCallRequest {
    std::string endpoint_uri;
    Bytes payload;
    std::optional<Nonce16> request_nonce;
    Freshness freshness = Freshness::CacheableIntraBlock;

    // Fresh <=> nonce present; cache reuse and per-call nonces are mutually
    // exclusive (a cached response could never echo a new nonce).
    bool nonce_rule_ok() const {
        return (freshness == Freshness::Fresh) == request_nonce.has_value();
    }

    bool operator==(const ExternalCallRequest&) const = default;
};

struct SignedResponse {
    Bytes payload;
    std::optional<Nonce16> response_nonce;
    std::uint64_t responder_timestamp = 0;
    Signature signature{};

    bool operator==(const SignedResponse&) const = default;
};

struct VerifiableExternalCall {
    ExternalCallRequest request;
    PublicKey public_key{};
    SignedResponse signed_response;

    bool operator==(const VerifiableExternalCall&) const = default;
};

// Cache identity of a request: hash of the canonical encoding with the nonce
// omitted, so requests differing only in nonce (or freshness) share a key.
struct CallKey {
    Hash32 digest{};

    auto operator<=>(const CallKey&) const = default;
};

enum class VerificationResult : std::uint8_t {
    Ok = 0,
    SignatureMismatch,
    NonceMismatch,
    StaleResponse,
};

const char* to_string(VerificationResult r);

// Injective, deterministic encoding: fields in fixed order (uri, payload,
// nonce-if-included), each 4-byte big-endian length prefixed.
Bytes canonical_encode_request(const ExternalCallRequest& req, bool include_nonce);

// Fields in fixed order: payload (length prefixed), nonce presence byte plus
// nonce bytes, 8-byte big-endian timestamp. This is the signed byte range.
Bytes canonical_encode_response(const Bytes& payload, const std::optional<Nonce16>& nonce,
                                std::uint64_t timestamp);

CallKey call_key(const ExternalCallRequest& req);

SignedResponse sign_response(const Bytes& payload, const std::optional<Nonce16>& nonce,
                             std::uint64_t timestamp, const SecretSeed& signing_key);

VerificationResult verify_external_call(const VerifiableExternalCall& call, std::uint64_t now,
                                        std::uint64_t max_age);

// Deterministic counter-mixed nonce source. Streams with distinct
// (domain, seed, actor) never collide in practice and replay exactly.
class NonceStream {
public:
    NonceStream(std::string_view domain, std::uint64_t seed, std::uint64_t actor);

    Nonce16 next();
    std::uint64_t drawn() const { return counter_; }

private:
    Hash32 key_{};
    std::uint64_t counter_ = 0;
};

Nonce16 make_nonce(NonceStream& stream);

}  // namespace vex
