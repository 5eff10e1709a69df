"""Verifiable random function stand-in.

Ed25519 signatures are deterministic, so ``output = blake2b(sign(sk, x))``
with the signature as proof is a function of ``(sk, x)`` that anyone holding
``pk`` can check.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

OUTPUT_BITS = 256


@dataclass(frozen=True, slots=True)
class VrfOutput:
    output: bytes
    proof: bytes

    @property
    def value(self) -> int:
        return int.from_bytes(self.output, "big")


def _digest(proof: bytes) -> bytes:
    return hashlib.blake2b(proof, digest_size=OUTPUT_BITS // 8).digest()


@dataclass(frozen=True, slots=True)
class VrfKeypair:
    sk: Ed25519PrivateKey
    pk: bytes

    @classmethod
    def from_seed(cls, seed: bytes) -> VrfKeypair:
        sk = Ed25519PrivateKey.from_private_bytes(seed)
        return cls(sk, sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw))

    @classmethod
    def generate(cls, rng: np.random.Generator) -> VrfKeypair:
        return cls.from_seed(rng.bytes(32))

    def eval(self, message: bytes) -> VrfOutput:
        proof = self.sk.sign(message)
        return VrfOutput(_digest(proof), proof)


def vrf_verify(pk: bytes, message: bytes, result: VrfOutput) -> bool:
    """True iff ``result`` is the keypair's evaluation of ``message``."""
    try:
        Ed25519PublicKey.from_public_bytes(pk).verify(result.proof, message)
    except (InvalidSignature, ValueError):
        return False
    return _digest(result.proof) == result.output
