#include "vex/sig.hpp"

#include <sodium.h>

namespace vex {

namespace {

void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) {
        throw InvalidKey("libsodium initialization failed");
    }
}

}  // namespace

KeyPair keypair_from_seed(const SecretSeed& seed) {
    ensure_sodium();
    KeyPair kp;
    kp.seed = seed;
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> expanded{};
    if (crypto_sign_seed_keypair(kp.pub.data(), expanded.data(), seed.data()) != 0) {
        throw InvalidKey("ed25519 key derivation failed");
    }
    return kp;
}

Signature sign_digest(const Hash32& digest, const SecretSeed& seed) {
    ensure_sodium();
    std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> pub{};
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> expanded{};
    if (crypto_sign_seed_keypair(pub.data(), expanded.data(), seed.data()) != 0) {
        throw InvalidKey("ed25519 key derivation failed");
    }
    Signature sig{};
    unsigned long long sig_len = 0;
    if (crypto_sign_detached(sig.data(), &sig_len, digest.data(), digest.size(), expanded.data()) != 0 ||
        sig_len != sig.size()) {
        throw InvalidKey("ed25519 signing failed");
    }
    return sig;
}

bool verify_digest(const Hash32& digest, const Signature& sig, const PublicKey& pub) {
    ensure_sodium();
    return crypto_sign_verify_detached(sig.data(), digest.data(), digest.size(), pub.data()) == 0;
}

}  // namespace vex
