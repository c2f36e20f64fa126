#include "dicelab/dice.hpp"

namespace dicelab::dice {

namespace {

void put_field(Bytes& out, ByteView field) {
    put_u16le(out, static_cast<uint16_t>(field.size()));
    out.insert(out.end(), field.begin(), field.end());
}

// Reads a length-prefixed field and enforces the exact expected length, so
// the encoding stays canonical (one valid byte string per certificate).
bool get_field(ByteView in, size_t& off, size_t expect, uint8_t* dst) {
    if (off + 2 > in.size()) return false;
    size_t len = get_u16le(in, off);
    off += 2;
    if (len != expect || off + len > in.size()) return false;
    std::memcpy(dst, in.data() + off, len);
    off += len;
    return true;
}

}  // namespace

Bytes AliasCertificate::tbs() const {
    Bytes out;
    out.reserve(kCertEncodedSize);
    put_field(out, subject_public_key);
    put_field(out, firmware_measurement.digest);
    put_field(out, boot_input);
    put_field(out, issuer);
    return out;
}

Bytes AliasCertificate::encode() const {
    Bytes out = tbs();
    put_field(out, signature);
    return out;
}

std::optional<AliasCertificate> AliasCertificate::decode(ByteView in) {
    AliasCertificate cert;
    size_t off = 0;
    if (!get_field(in, off, 32, cert.subject_public_key.data())) return std::nullopt;
    if (!get_field(in, off, 32, cert.firmware_measurement.digest.data())) return std::nullopt;
    if (!get_field(in, off, 32, cert.boot_input.data())) return std::nullopt;
    if (!get_field(in, off, 32, cert.issuer.data())) return std::nullopt;
    if (!get_field(in, off, 64, cert.signature.data())) return std::nullopt;
    if (off != in.size()) return std::nullopt;
    return cert;
}

bool AliasCertificate::verify(const crypto::PublicKey& issuer_pub) const {
    if (issuer != issuer_pub) return false;
    return crypto::ed25519_verify(issuer_pub, tbs(), signature);
}

Measurement measure(ByteView layer_bytes) {
    if (layer_bytes.empty()) throw InvalidLayer("cannot measure an empty layer");
    return Measurement{crypto::sha256(layer_bytes)};
}

LayerSecret derive_layer_secret(const Uds& uds, const Measurement& riot_measurement) {
    return LayerSecret{crypto::hkdf_sha256(
        uds.bytes, riot_measurement.digest,
        ByteView{reinterpret_cast<const uint8_t*>(kLabelCdi), 3})};
}

KeyPair derive_device_id(const LayerSecret& secret) {
    auto seed = crypto::hkdf_sha256(secret.bytes, {},
                                    ByteView{reinterpret_cast<const uint8_t*>(kLabelDeviceId), 2});
    return crypto::ed25519_keypair(seed);
}

KeyPair derive_alias_key(const LayerSecret& secret, const Measurement& app_measurement,
                         const std::optional<BootInput>& boot_input) {
    Bytes salt(app_measurement.digest.begin(), app_measurement.digest.end());
    if (boot_input) salt.insert(salt.end(), boot_input->begin(), boot_input->end());
    auto seed = crypto::hkdf_sha256(secret.bytes, salt,
                                    ByteView{reinterpret_cast<const uint8_t*>(kLabelAlias), 5});
    return crypto::ed25519_keypair(seed);
}

AliasCertificate issue_alias_certificate(const KeyPair& device_id,
                                         const crypto::PublicKey& alias_public,
                                         const Measurement& app_measurement,
                                         const std::optional<BootInput>& boot_input) {
    AliasCertificate cert;
    cert.subject_public_key = alias_public;
    cert.firmware_measurement = app_measurement;
    if (boot_input) cert.boot_input = *boot_input;
    cert.issuer = device_id.public_key;
    cert.signature = crypto::ed25519_sign(device_id.secret, cert.tbs());
    return cert;
}

}  // namespace dicelab::dice
