#pragma once

#include <array>
#include <optional>
#include <stdexcept>

#include "dicelab/bytes.hpp"
#include "dicelab/crypto.hpp"

// Layered identity derivation: UDS -> layer secret -> DeviceID / alias key ->
// alias certificate. Pure functions over value types; nothing here touches
// the simulator.
namespace dicelab::dice {

struct InvalidLayer : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Uds {
    std::array<uint8_t, 32> bytes{};
};

struct Measurement {
    std::array<uint8_t, 32> digest{};
    friend bool operator==(const Measurement&, const Measurement&) = default;
};

struct LayerSecret {
    std::array<uint8_t, 32> bytes{};
    friend bool operator==(const LayerSecret&, const LayerSecret&) = default;
};

using KeyPair = crypto::SigningKey;
using BootInput = std::array<uint8_t, 32>;

// Domain-separation labels for the extract-expand derivations.
inline constexpr const char* kLabelCdi = "CDI";
inline constexpr const char* kLabelDeviceId = "ID";
inline constexpr const char* kLabelAlias = "ALIAS";

// Signed claims binding the alias public key to the application measurement
// (and, for boot-cycle countermeasures, to the boot input). Encoding is a
// fixed field order with little-endian u16 length prefixes; byte layout is
// documented in docs/wire_formats.md.
struct AliasCertificate {
    crypto::PublicKey subject_public_key{};
    Measurement firmware_measurement{};
    BootInput boot_input{};  // all-zero when no boot-cycle input is active
    crypto::PublicKey issuer{};
    crypto::Signature signature{};

    Bytes tbs() const;
    Bytes encode() const;
    static std::optional<AliasCertificate> decode(ByteView in);
    bool verify(const crypto::PublicKey& issuer_pub) const;

    friend bool operator==(const AliasCertificate&, const AliasCertificate&) = default;
};

inline constexpr size_t kCertEncodedSize = 2 + 32 + 2 + 32 + 2 + 32 + 2 + 32 + 2 + 64;

Measurement measure(ByteView layer_bytes);
LayerSecret derive_layer_secret(const Uds& uds, const Measurement& riot_measurement);
KeyPair derive_device_id(const LayerSecret& secret);
KeyPair derive_alias_key(const LayerSecret& secret, const Measurement& app_measurement,
                         const std::optional<BootInput>& boot_input = std::nullopt);
AliasCertificate issue_alias_certificate(const KeyPair& device_id,
                                         const crypto::PublicKey& alias_public,
                                         const Measurement& app_measurement,
                                         const std::optional<BootInput>& boot_input = std::nullopt);

}  // namespace dicelab::dice
