"""Unit tests for the Ed25519-backed VRF."""

import numpy as np

from chainscale.election.vrf import VrfKeypair, VrfOutput, vrf_verify


def _flip(data: bytes, bit: int) -> bytes:
    out = bytearray(data)
    out[bit // 8] ^= 1 << (bit % 8)
    return bytes(out)


class TestVrf:
    """Tests for VRF evaluation and verification."""

    def test_eval_is_deterministic(self):
        keypair = VrfKeypair.from_seed(bytes(range(32)))
        assert keypair.eval(b"epoch-1") == keypair.eval(b"epoch-1")
        assert keypair.eval(b"epoch-1") != keypair.eval(b"epoch-2")

    def test_generate_is_seeded(self):
        first = VrfKeypair.generate(np.random.default_rng(9))
        second = VrfKeypair.generate(np.random.default_rng(9))
        assert first.pk == second.pk
        assert len(first.pk) == 32

    def test_honest_output_verifies(self):
        keypair = VrfKeypair.from_seed(b"\x07" * 32)
        result = keypair.eval(b"seed")
        assert len(result.output) == 32
        assert vrf_verify(keypair.pk, b"seed", result)

    def test_tampered_output_rejected(self):
        keypair = VrfKeypair.from_seed(b"\x07" * 32)
        result = keypair.eval(b"seed")
        forged = VrfOutput(_flip(result.output, 5), result.proof)
        assert not vrf_verify(keypair.pk, b"seed", forged)

    def test_tampered_proof_rejected(self):
        keypair = VrfKeypair.from_seed(b"\x07" * 32)
        result = keypair.eval(b"seed")
        forged = VrfOutput(result.output, _flip(result.proof, 100))
        assert not vrf_verify(keypair.pk, b"seed", forged)

    def test_other_input_rejected(self):
        keypair = VrfKeypair.from_seed(b"\x07" * 32)
        result = keypair.eval(b"seed")
        assert not vrf_verify(keypair.pk, b"seee", result)

    def test_other_key_rejected(self):
        keypair = VrfKeypair.from_seed(b"\x07" * 32)
        other = VrfKeypair.from_seed(b"\x08" * 32)
        assert not vrf_verify(other.pk, b"seed", keypair.eval(b"seed"))

    def test_malformed_public_key_rejected(self):
        keypair = VrfKeypair.from_seed(b"\x07" * 32)
        assert not vrf_verify(b"short", b"seed", keypair.eval(b"seed"))
