#!/usr/bin/env python3
"""Regenerates the frozen test vectors in this directory.

Uses only hashlib/hmac and the `cryptography` package, so the values are an
independent cross-check of the C++ implementation. Run from the repo root:

    python3 tests/vectors/gen_vectors.py
"""

import hashlib
import hmac
import os

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

OUT_DIR = os.path.dirname(os.path.abspath(__file__))


def hkdf_sha256(ikm: bytes, salt: bytes, info: bytes, length: int = 32) -> bytes:
    if not salt:
        salt = b"\x00" * 32
    prk = hmac.new(salt, ikm, hashlib.sha256).digest()
    okm = b""
    block = b""
    counter = 1
    while len(okm) < length:
        block = hmac.new(prk, block + info + bytes([counter]), hashlib.sha256).digest()
        okm += block
        counter += 1
    return okm[:length]


def lv(field: bytes) -> bytes:
    return len(field).to_bytes(2, "little") + field


def ed25519_pub(seed: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(seed).public_key().public_bytes_raw()


def ed25519_sign(seed: bytes, msg: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(seed).sign(msg)


def emit(name: str, lines):
    path = os.path.join(OUT_DIR, name)
    with open(path, "w") as f:
        for key, value in lines:
            f.write(f"{key} {value.hex() if isinstance(value, bytes) else value}\n")
    print(f"wrote {path}")


def main():
    # --- sha256 ---
    ramp = bytes(i & 0xFF for i in range(256))
    emit(
        "sha256.txt",
        [
            ("empty_in", ""),
            ("empty_out", hashlib.sha256(b"").digest()),
            ("abc_in", b"abc"),
            ("abc_out", hashlib.sha256(b"abc").digest()),
            ("ramp_in", ramp),
            ("ramp_out", hashlib.sha256(ramp).digest()),
        ],
    )

    # --- layered derivation: uds -> cdi -> id/alias seeds ---
    uds = bytes(range(32))
    riot_meas = hashlib.sha256(b"riot layer bytes, frozen for vectors").digest()
    app_meas = hashlib.sha256(b"app layer bytes, frozen for vectors").digest()
    boot_input = bytes(reversed(range(32)))

    cdi = hkdf_sha256(uds, riot_meas, b"CDI")
    id_seed = hkdf_sha256(cdi, b"", b"ID")
    alias_seed = hkdf_sha256(cdi, app_meas, b"ALIAS")
    alias_seed_bi = hkdf_sha256(cdi, app_meas + boot_input, b"ALIAS")
    emit(
        "kdf.txt",
        [
            ("uds", uds),
            ("riot_meas", riot_meas),
            ("app_meas", app_meas),
            ("boot_input", boot_input),
            ("cdi", cdi),
            ("id_seed", id_seed),
            ("alias_seed", alias_seed),
            ("alias_seed_with_boot_input", alias_seed_bi),
        ],
    )

    # --- ed25519 (RFC 8032 test 1 plus a derived-seed case) ---
    rfc_seed = bytes.fromhex(
        "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"
    )
    emit(
        "ed25519.txt",
        [
            ("rfc_seed", rfc_seed),
            ("rfc_pub", ed25519_pub(rfc_seed)),
            ("rfc_sig_empty", ed25519_sign(rfc_seed, b"")),
            ("id_pub", ed25519_pub(id_seed)),
            ("alias_pub", ed25519_pub(alias_seed)),
        ],
    )

    # --- full certificate: length-prefixed claims signed by the DeviceID key ---
    subject = ed25519_pub(alias_seed)
    issuer = ed25519_pub(id_seed)
    no_input = b"\x00" * 32
    tbs = lv(subject) + lv(app_meas) + lv(no_input) + lv(issuer)
    sig = ed25519_sign(id_seed, tbs)
    cert = tbs + lv(sig)
    emit(
        "cert.txt",
        [
            ("subject", subject),
            ("issuer", issuer),
            ("tbs", tbs),
            ("cert", cert),
        ],
    )


if __name__ == "__main__":
    main()
