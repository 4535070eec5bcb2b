import hashlib

import pytest
from hypothesis import given, strategies as st

from stillpos.crypto import base58, hash160, ripemd160, secp256k1, sha256d


# published RIPEMD-160 test vectors
@pytest.mark.parametrize(
    "message,digest",
    [
        (b"", "9c1185a5c5e9fc54612808977ee8f548b2258d31"),
        (b"a", "0bdc9d2d256b3ee9daae347be6f4dc835a467ffe"),
        (b"abc", "8eb208f7e05d987a9b044a8e98c6b087f15a0bfc"),
        (b"message digest", "5d0689ef49d2fae572b881b123a85ffa21595f36"),
        (b"abcdefghijklmnopqrstuvwxyz", "f71c27109c692c1b56bbdceb5b9d2865b3708dbc"),
        (
            b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq",
            "12a053384a9c0c88e405a06c27dcf49ada62eb2b",
        ),
        (
            b"abcdefghbcdefghicdefghijdefghijkefghijklfghijklmghijklmn"
            b"hijklmnoijklmnopjklmnopqklmnopqrlmnopqrsmnopqrstnopqrstu",
            "6f3fa39b6b503c384f919a49a7aa5c2c08bdfb45",
        ),
        (b"1234567890" * 8, "9b752e45573d4b39f4dbd3323cab82bf63326bfb"),
        (b"a" * 1_000_000, "52783243c1697bdbe16d37f97f68f08325dc1528"),
    ],
)
def test_ripemd160_vectors(message, digest):
    assert ripemd160(message).hex() == digest


def test_hash160_is_ripemd_of_sha():
    data = b"\x02" + b"\x11" * 32
    assert hash160(data) == ripemd160(hashlib.sha256(data).digest())


def test_sha256d():
    assert sha256d(b"hello") == hashlib.sha256(hashlib.sha256(b"hello").digest()).digest()


class TestBase58Check:
    def test_all_zero_hash_mainnet(self):
        # version 0x00 over twenty zero bytes
        assert base58.b58check_encode(b"\x00" * 21) == "1111111111111111111114oLvT2"

    def test_round_trip_random_payloads(self):
        import random

        rng = random.Random(58)
        for _ in range(1000):
            payload = bytes(rng.randrange(256) for _ in range(rng.randrange(1, 60)))
            assert base58.b58check_decode(base58.b58check_encode(payload)) == payload

    def test_checksum_failure(self):
        encoded = base58.b58check_encode(b"\x00" * 21)
        corrupted = encoded[:-1] + ("2" if encoded[-1] != "2" else "3")
        with pytest.raises(base58.Base58Error):
            base58.b58check_decode(corrupted)

    def test_invalid_characters_rejected(self):
        for bad in ("0", "O", "I", "l", "+"):
            with pytest.raises(base58.Base58Error):
                base58.b58decode("abc" + bad)

    @given(st.binary(min_size=1, max_size=64))
    def test_round_trip_property(self, payload):
        assert base58.b58check_decode(base58.b58check_encode(payload)) == payload


class TestCurve:
    def test_generator_on_curve(self):
        assert secp256k1.is_on_curve((secp256k1.GX, secp256k1.GY))

    def test_compress_decompress_round_trip(self):
        for k in (1, 2, 3, 0xDEADBEEF, secp256k1.N - 1):
            point = secp256k1.mul_g(k)
            restored = secp256k1.decompress(secp256k1.compress(point))
            assert (int(restored[0]), int(restored[1])) == (int(point[0]), int(point[1]))

    def test_mul_matches_generic_mul(self):
        g = (secp256k1.GX, secp256k1.GY)
        for k in (1, 5, 1234567, 2**200 + 17):
            a = secp256k1.mul_g(k)
            b = secp256k1.point_mul(k, g)
            assert (int(a[0]), int(a[1])) == (int(b[0]), int(b[1]))

    def test_decompress_rejects_off_curve(self):
        with pytest.raises(secp256k1.InvalidPoint):
            # x=5 has no curve point with this parity encoding on secp256k1
            secp256k1.decompress(b"\x02" + (5).to_bytes(32, "big"))
        with pytest.raises(secp256k1.InvalidPoint):
            secp256k1.decompress(b"\x05" + b"\x00" * 32)


class TestEcdsa:
    def test_deterministic_signatures(self):
        digest = hashlib.sha256(b"payment").digest()
        assert secp256k1.sign_digest(99, digest) == secp256k1.sign_digest(99, digest)

    def test_low_s_normalization(self):
        for i in range(1, 40):
            digest = hashlib.sha256(bytes([i])).digest()
            _, s = secp256k1.sign_digest(1000 + i, digest)
            assert 1 <= s <= secp256k1.N // 2

    def test_openssl_accepts_our_signatures(self):
        from cryptography.hazmat.primitives import hashes
        from cryptography.hazmat.primitives.asymmetric import ec
        from cryptography.hazmat.primitives.asymmetric.utils import Prehashed

        priv = 0x1234_5678_9ABC_DEF0_1234
        digest = hashlib.sha256(b"cross-check").digest()
        r, s = secp256k1.sign_digest(priv, digest)
        der = secp256k1.der_encode(r, s)
        public = ec.derive_private_key(priv, ec.SECP256K1()).public_key()
        public.verify(der, digest, ec.ECDSA(Prehashed(hashes.SHA256())))  # raises if bad

    def test_der_round_trip(self):
        r, s = secp256k1.sign_digest(7, hashlib.sha256(b"x").digest())
        assert secp256k1.der_decode(secp256k1.der_encode(r, s)) == (r, s)

    def test_is_low_s_rejects_high_s(self):
        r, s = secp256k1.sign_digest(7, hashlib.sha256(b"y").digest())
        high = secp256k1.der_encode(r, secp256k1.N - s)
        assert secp256k1.is_low_s(secp256k1.der_encode(r, s))
        assert not secp256k1.is_low_s(high)
