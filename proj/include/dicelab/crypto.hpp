#pragma once

#include <array>
#include <cstdint>

#include "dicelab/bytes.hpp"

// Thin wrappers over libsodium plus an HKDF-SHA256 composed from its HMAC.
// Everything here is deterministic given its inputs.
namespace dicelab::crypto {

using Digest = std::array<uint8_t, 32>;
using Seed = std::array<uint8_t, 32>;
using PublicKey = std::array<uint8_t, 32>;
using SecretKey = std::array<uint8_t, 64>;  // seed || public key
using Signature = std::array<uint8_t, 64>;

Digest sha256(ByteView data);
Digest hmac_sha256(ByteView key, ByteView data);

// RFC 5869 extract-then-expand, fixed 32-byte output. An empty salt is
// treated as 32 zero bytes.
Seed hkdf_sha256(ByteView ikm, ByteView salt, ByteView info);

struct SigningKey {
    SecretKey secret{};
    PublicKey public_key{};
};

SigningKey ed25519_keypair(const Seed& seed);
Signature ed25519_sign(const SecretKey& secret, ByteView msg);
bool ed25519_verify(const PublicKey& pub, ByteView msg, const Signature& sig);

}  // namespace dicelab::crypto
