#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "vex/hash.hpp"

namespace vex {

using SecretSeed = std::array<std::uint8_t, 32>;
using PublicKey = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;

struct InvalidKey : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KeyPair {
    SecretSeed seed{};
    PublicKey pub{};
};

KeyPair keypair_from_seed(const SecretSeed& seed);

// Deterministic Ed25519 over a 32-byte message digest.
Signature sign_digest(const Hash32& digest, const SecretSeed& seed);
bool verify_digest(const Hash32& digest, const Signature& sig, const PublicKey& pub);

}  // namespace vex
