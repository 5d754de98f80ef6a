#include "vex/call.hpp"

namespace vex {

const char* to_string(Freshness f) {
    switch (f) {
        case Freshness::Fresh: return "fresh";
        case Freshness::CacheableIntraBlock: return "cacheable_intra_block";
        case Freshness::CacheableHistorical: return "cacheable_historical";
    }
    return "?";
}

const char* to_string(VerificationResult r) {
    switch (r) {
        case VerificationResult::Ok: return "ok";
        case VerificationResult::SignatureMismatch: return "signature_mismatch";
        case VerificationResult::NonceMismatch: return "nonce_mismatch";
        case VerificationResult::StaleResponse: return "stale_response";
    }
    return "?";
}

Bytes canonical_encode_request(const ExternalCallRequest& req, bool include_nonce) {
    if (req.endpoint_uri.size() > kMaxUriBytes) {
        throw OversizeField("endpoint_uri exceeds 1024 bytes");
    }
    if (req.payload.size() > kMaxPayloadBytes) {
        throw OversizeField("payload exceeds 65536 bytes");
    }
    if (!utf8_valid(req.endpoint_uri)) {
        throw std::invalid_argument("endpoint_uri is not valid UTF-8");
    }
    Encoder enc;
    enc.length_prefixed(req.endpoint_uri);
    enc.length_prefixed(as_view(req.payload));
    if (include_nonce && req.request_nonce) {
        enc.u32be(static_cast<std::uint32_t>(req.request_nonce->size()));
        enc.raw(*req.request_nonce);
    }
    return enc.take();
}

Bytes canonical_encode_response(const Bytes& payload, const std::optional<Nonce16>& nonce,
                                std::uint64_t timestamp) {
    Encoder enc;
    enc.length_prefixed(as_view(payload));
    if (nonce) {
        enc.u8(1);
        enc.raw(*nonce);
    } else {
        enc.u8(0);
    }
    enc.u64be(timestamp);
    return enc.take();
}

CallKey call_key(const ExternalCallRequest& req) {
    return CallKey{sha256(canonical_encode_request(req, /*include_nonce=*/false))};
}

SignedResponse sign_response(const Bytes& payload, const std::optional<Nonce16>& nonce,
                             std::uint64_t timestamp, const SecretSeed& signing_key) {
    SignedResponse resp;
    resp.payload = payload;
    resp.response_nonce = nonce;
    resp.responder_timestamp = timestamp;
    const Hash32 digest = sha256(canonical_encode_response(payload, nonce, timestamp));
    resp.signature = sign_digest(digest, signing_key);
    return resp;
}

VerificationResult verify_external_call(const VerifiableExternalCall& call, std::uint64_t now,
                                        std::uint64_t max_age) {
    const SignedResponse& resp = call.signed_response;
    const Hash32 digest =
        sha256(canonical_encode_response(resp.payload, resp.response_nonce, resp.responder_timestamp));
    if (!verify_digest(digest, resp.signature, call.public_key)) {
        return VerificationResult::SignatureMismatch;
    }
    if (call.request.request_nonce.has_value() != resp.response_nonce.has_value()) {
        return VerificationResult::NonceMismatch;
    }
    if (call.request.request_nonce && *call.request.request_nonce != *resp.response_nonce) {
        return VerificationResult::NonceMismatch;
    }
    if (max_age != kNoMaxAge && now > resp.responder_timestamp &&
        now - resp.responder_timestamp > max_age) {
        return VerificationResult::StaleResponse;
    }
    return VerificationResult::Ok;
}

NonceStream::NonceStream(std::string_view domain, std::uint64_t seed, std::uint64_t actor) {
    Encoder enc;
    enc.length_prefixed(domain);
    enc.u64be(seed);
    enc.u64be(actor);
    key_ = sha256(enc.take());
}

Nonce16 NonceStream::next() {
    Encoder enc;
    enc.raw(key_);
    enc.u64be(counter_++);
    const Hash32 digest = sha256(enc.take());
    Nonce16 nonce{};
    std::copy(digest.begin(), digest.begin() + nonce.size(), nonce.begin());
    return nonce;
}

Nonce16 make_nonce(NonceStream& stream) { return stream.next(); }

}  // namespace vex
