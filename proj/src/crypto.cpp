#include "dicelab/crypto.hpp"

#include <sodium.h>

#include <mutex>
#include <stdexcept>

namespace dicelab::crypto {

namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
    });
}

}  // namespace

Digest sha256(ByteView data) {
    ensure_sodium();
    Digest out{};
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

Digest hmac_sha256(ByteView key, ByteView data) {
    ensure_sodium();
    Digest out{};
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    crypto_auth_hmacsha256_update(&st, data.data(), data.size());
    crypto_auth_hmacsha256_final(&st, out.data());
    return out;
}

Seed hkdf_sha256(ByteView ikm, ByteView salt, ByteView info) {
    static const uint8_t zero_salt[32] = {};
    ByteView eff_salt = salt.empty() ? ByteView{zero_salt, 32} : salt;
    Digest prk = hmac_sha256(eff_salt, ikm);
    // One expand block suffices for a 32-byte output.
    Bytes block(info.begin(), info.end());
    block.push_back(0x01);
    return hmac_sha256(prk, block);
}

SigningKey ed25519_keypair(const Seed& seed) {
    ensure_sodium();
    SigningKey kp;
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret.data(), seed.data());
    return kp;
}

Signature ed25519_sign(const SecretKey& secret, ByteView msg) {
    ensure_sodium();
    Signature sig{};
    crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), secret.data());
    return sig;
}

bool ed25519_verify(const PublicKey& pub, ByteView msg, const Signature& sig) {
    ensure_sodium();
    return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), pub.data()) == 0;
}

}  // namespace dicelab::crypto
