#include "doctest.h"

#include <set>

#include "test_util.hpp"
#include "vex/call.hpp"

using namespace vex;

namespace {

SecretSeed test_seed(std::uint8_t fill) {
    SecretSeed seed{};
    seed.fill(fill);
    return seed;
}

Nonce16 test_nonce(std::uint8_t fill) {
    Nonce16 nonce{};
    nonce.fill(fill);
    return nonce;
}

VerifiableExternalCall make_call(const KeyPair& kp, const Bytes& payload,
                                 std::optional<Nonce16> nonce, std::uint64_t ts,
                                 Freshness f = Freshness::Fresh) {
    ExternalCallRequest req;
    req.endpoint_uri = "oracle://test";
    req.payload = to_bytes("in");
    req.request_nonce = nonce;
    req.freshness = nonce ? Freshness::Fresh : f;
    return VerifiableExternalCall{req, kp.pub, sign_response(payload, nonce, ts, kp.seed)};
}

}  // namespace

TEST_SUITE_BEGIN("call");

TEST_CASE("request encoding matches frozen vectors") {
    auto vectors = vextest::load_vectors("request_encoding.txt");

    ExternalCallRequest empty;
    empty.freshness = Freshness::CacheableIntraBlock;
    CHECK(canonical_encode_request(empty, false) == vectors.at("empty"));
    CHECK(canonical_encode_request(empty, false).size() == 8);

    ExternalCallRequest single;
    single.endpoint_uri = "a";
    single.payload = Bytes{0x01};
    CHECK(canonical_encode_request(single, false) == vectors.at("single"));

    ExternalCallRequest with_nonce = single;
    with_nonce.request_nonce = test_nonce(0x00);
    with_nonce.freshness = Freshness::Fresh;
    CHECK(canonical_encode_request(with_nonce, true) == vectors.at("with_nonce"));
    // nonce omitted on request: same bytes as the nonce-free request
    CHECK(canonical_encode_request(with_nonce, false) == vectors.at("single"));
}

TEST_CASE("requests differing only in nonce share encoding and call key") {
    ExternalCallRequest a;
    a.endpoint_uri = "oracle://rng";
    a.payload = to_bytes("data");
    a.request_nonce = test_nonce(0x11);
    a.freshness = Freshness::Fresh;
    ExternalCallRequest b = a;
    b.request_nonce = test_nonce(0x22);

    CHECK(canonical_encode_request(a, false) == canonical_encode_request(b, false));
    CHECK(call_key(a) == call_key(b));
    CHECK(canonical_encode_request(a, true) != canonical_encode_request(b, true));
}

TEST_CASE("oversize fields are rejected") {
    ExternalCallRequest req;
    req.endpoint_uri = std::string(kMaxUriBytes + 1, 'u');
    CHECK_THROWS_AS(canonical_encode_request(req, false), OversizeField);

    req.endpoint_uri = "ok";
    req.payload.assign(kMaxPayloadBytes + 1, 0x00);
    CHECK_THROWS_AS(canonical_encode_request(req, false), OversizeField);

    req.payload.assign(kMaxPayloadBytes, 0x00);
    CHECK_NOTHROW(canonical_encode_request(req, false));
}

TEST_CASE("encoding is injective over random field tuples") {
    std::mt19937_64 rng(0xc0ffee);
    std::set<Bytes> encodings;
    std::set<std::tuple<std::string, Bytes, bool, Nonce16>> tuples;
    int distinct = 0;
    for (int i = 0; i < 500; ++i) {
        ExternalCallRequest req;
        auto uri_bytes = vextest::random_bytes(rng, 0, 6);
        req.endpoint_uri = std::string(uri_bytes.begin(), uri_bytes.end());
        // keep it ASCII so UTF-8 validity holds
        for (auto& c : req.endpoint_uri) c = 'a' + (static_cast<unsigned char>(c) % 26);
        req.payload = vextest::random_bytes(rng, 0, 6);
        Nonce16 nonce{};
        bool has_nonce = rng() % 2 == 0;
        if (has_nonce) {
            for (auto& b : nonce) b = static_cast<std::uint8_t>(rng());
            req.request_nonce = nonce;
            req.freshness = Freshness::Fresh;
        }
        if (tuples.insert({req.endpoint_uri, req.payload, has_nonce, nonce}).second) {
            ++distinct;
            CHECK(encodings.insert(canonical_encode_request(req, true)).second);
        }
    }
    CHECK(distinct > 400);
    CHECK(encodings.size() == static_cast<std::size_t>(distinct));
}

TEST_CASE("sign then verify round trips at age zero") {
    const KeyPair kp = keypair_from_seed(test_seed(0x42));
    auto call = make_call(kp, to_bytes("payload"), test_nonce(0x07), 100);
    CHECK(verify_external_call(call, 100, 0) == VerificationResult::Ok);
}

TEST_CASE("verification with the wrong key fails") {
    const KeyPair a = keypair_from_seed(test_seed(0x01));
    const KeyPair b = keypair_from_seed(test_seed(0x02));
    auto call = make_call(a, to_bytes("payload"), test_nonce(0x07), 5);
    call.public_key = b.pub;
    CHECK(verify_external_call(call, 5, 10) == VerificationResult::SignatureMismatch);
}

TEST_CASE("signing is deterministic") {
    const SecretSeed seed = test_seed(0x33);
    auto r1 = sign_response(to_bytes("x"), test_nonce(0x01), 9, seed);
    auto r2 = sign_response(to_bytes("x"), test_nonce(0x01), 9, seed);
    CHECK(r1.signature == r2.signature);
}

TEST_CASE("known-answer vectors from the reference implementation") {
    auto v = vextest::load_vectors("sign_response_kat.txt");
    const auto seed = vextest::fixed<32>(v.at("seed"));
    const auto expected_pub = vextest::fixed<32>(v.at("public_key"));

    const KeyPair kp = keypair_from_seed(seed);
    CHECK(kp.pub == expected_pub);

    const Bytes payload = v.at("payload1");
    const auto nonce = vextest::fixed<16>(v.at("nonce1"));
    CHECK(canonical_encode_response(payload, nonce, 7) == v.at("encoding1"));

    auto resp = sign_response(payload, nonce, 7, seed);
    CHECK(Bytes(resp.signature.begin(), resp.signature.end()) == v.at("signature1"));

    CHECK(canonical_encode_response(payload, std::nullopt, 7) == v.at("encoding2"));
    auto resp2 = sign_response(payload, std::nullopt, 7, seed);
    CHECK(Bytes(resp2.signature.begin(), resp2.signature.end()) == v.at("signature2"));
}

TEST_CASE("nonce echo is enforced") {
    const KeyPair kp = keypair_from_seed(test_seed(0x55));
    auto call = make_call(kp, to_bytes("p"), test_nonce(0x09), 3);

    SUBCASE("echoed nonce differs") {
        call.signed_response = sign_response(to_bytes("p"), test_nonce(0x0a), 3, kp.seed);
        CHECK(verify_external_call(call, 3, 10) == VerificationResult::NonceMismatch);
    }
    SUBCASE("response dropped the nonce") {
        call.signed_response = sign_response(to_bytes("p"), std::nullopt, 3, kp.seed);
        CHECK(verify_external_call(call, 3, 10) == VerificationResult::NonceMismatch);
    }
    SUBCASE("request had none but response carries one") {
        call.request.request_nonce.reset();
        call.request.freshness = Freshness::CacheableIntraBlock;
        CHECK(verify_external_call(call, 3, 10) == VerificationResult::NonceMismatch);
    }
}

TEST_CASE("staleness boundary") {
    const KeyPair kp = keypair_from_seed(test_seed(0x77));
    const std::uint64_t max_age = 30;
    auto at_limit = make_call(kp, to_bytes("p"), test_nonce(0x01), 70);
    CHECK(verify_external_call(at_limit, 100, max_age) == VerificationResult::Ok);

    auto beyond = make_call(kp, to_bytes("p"), test_nonce(0x02), 69);
    CHECK(verify_external_call(beyond, 100, max_age) == VerificationResult::StaleResponse);

    // future-dated responses have age zero
    auto future = make_call(kp, to_bytes("p"), test_nonce(0x03), 200);
    CHECK(verify_external_call(future, 100, max_age) == VerificationResult::Ok);

    // kNoMaxAge disables the check entirely
    CHECK(verify_external_call(beyond, 1u << 20, kNoMaxAge) == VerificationResult::Ok);
}

TEST_CASE("any single byte flip in the response payload is rejected") {
    const KeyPair kp = keypair_from_seed(test_seed(0x88));
    std::mt19937_64 rng(1234);
    for (int i = 0; i < 100; ++i) {
        auto call = make_call(kp, vextest::random_bytes(rng, 1, 32), test_nonce(0x01), 10);
        auto& payload = call.signed_response.payload;
        payload[rng() % payload.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        CHECK(verify_external_call(call, 10, 100) == VerificationResult::SignatureMismatch);
    }
}

TEST_CASE("single bit tampering anywhere in the call fails verification") {
    const KeyPair kp = keypair_from_seed(test_seed(0x99));
    std::mt19937_64 rng(987);
    int rejected = 0;
    const int kCases = 1200;
    for (int i = 0; i < kCases; ++i) {
        auto call = make_call(kp, vextest::random_bytes(rng, 1, 24), test_nonce(0x3c), 50);
        REQUIRE(verify_external_call(call, 50, 100) == VerificationResult::Ok);
        switch (rng() % 4) {
            case 0: {
                auto& p = call.signed_response.payload;
                p[rng() % p.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
                break;
            }
            case 1: {
                auto& n = *call.signed_response.response_nonce;
                n[rng() % n.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
                break;
            }
            case 2: {
                auto& s = call.signed_response.signature;
                s[rng() % s.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
                break;
            }
            case 3: {
                auto& k = call.public_key;
                k[rng() % k.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
                break;
            }
        }
        if (verify_external_call(call, 50, 100) != VerificationResult::Ok) {
            ++rejected;
        }
    }
    CHECK(rejected == kCases);
}

TEST_CASE("nonce stream is fresh, reproducible and collision free") {
    NonceStream a("test", 42, 0);
    NonceStream b("test", 42, 0);

    const Nonce16 first = make_nonce(a);
    const Nonce16 second = make_nonce(a);
    CHECK(first != second);

    CHECK(make_nonce(b) == first);
    CHECK(make_nonce(b) == second);

    NonceStream other_seed("test", 43, 0);
    CHECK(make_nonce(other_seed) != first);

    NonceStream big("test", 7, 1);
    std::set<Nonce16> seen;
    bool all_unique = true;
    for (int i = 0; i < 100000; ++i) {
        all_unique = seen.insert(big.next()).second && all_unique;
    }
    CHECK(all_unique);
}

TEST_SUITE_END();
