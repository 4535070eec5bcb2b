import pytest

from stillpos.crypto import secp256k1
from stillpos.errors import ValidationError
from stillpos.keystore import (
    MAINNET,
    REGTEST,
    TESTNET,
    decode_address,
    decode_wif,
    encode_address,
    encode_wif,
)
from stillpos.keystore.addresses import address_for_hash

# compressed public key for private scalar 1 (the generator point)
PUBKEY_ONE = secp256k1.compress((secp256k1.GX, secp256k1.GY))


class TestAddresses:
    def test_zero_hash_mainnet_address(self):
        assert address_for_hash(b"\x00" * 20, MAINNET) == "1111111111111111111114oLvT2"

    def test_zero_hash_testnet_address(self):
        # same 20-byte hash under the testnet version byte
        assert address_for_hash(b"\x00" * 20, TESTNET) == "mfWxJ45yp2SFn7UciZyNpvDKrzbhyfKrY8"

    def test_known_key_addresses(self):
        assert encode_address(PUBKEY_ONE, MAINNET) == "1BgGZ9tcN4rm9KBzDn7KprQz87SZ26SAMH"
        assert encode_address(PUBKEY_ONE, TESTNET) == "mrCDrCybB6J1vRfbwM5hemdJz73FwDBC8r"

    def test_network_changes_leading_character_class(self):
        mainnet = encode_address(PUBKEY_ONE, MAINNET)
        testnet = encode_address(PUBKEY_ONE, TESTNET)
        assert mainnet != testnet
        assert mainnet[0] == "1"
        assert testnet[0] in ("m", "n")

    def test_regtest_uses_testnet_version(self):
        assert encode_address(PUBKEY_ONE, REGTEST) == encode_address(PUBKEY_ONE, TESTNET)

    def test_round_trip(self):
        address = encode_address(PUBKEY_ONE, MAINNET)
        version, payload_hash = decode_address(address)
        assert version == MAINNET.p2pkh_version
        assert address_for_hash(payload_hash, MAINNET) == address

    def test_invalid_point_rejected(self):
        with pytest.raises(ValidationError):
            encode_address(b"\x02" + (5).to_bytes(32, "big"), MAINNET)
        with pytest.raises(ValidationError):
            encode_address(b"\x04" + b"\x00" * 32, MAINNET)

    def test_decode_rejects_garbage(self):
        with pytest.raises(ValidationError):
            decode_address("not-an-address")
        with pytest.raises(ValidationError):
            decode_address("1111111111111111111114oLvT3")  # checksum off by one


class TestWif:
    def test_scalar_one_wif(self):
        wif = encode_wif((1).to_bytes(32, "big"), MAINNET)
        assert wif == "KwDiBf89QgGbjEhKnhXJuH7LrciVrZi3qYjgd9M7rFU73sVHnoWn"

    def test_scalar_one_wif_testnet(self):
        wif = encode_wif((1).to_bytes(32, "big"), TESTNET)
        assert wif == "cMahea7zqjxrtgAbB7LSGbcQUr1uX1ojuat9jZodMN87JcbXMTcA"

    def test_wif_round_trip(self):
        key = bytes(range(32))
        wif = encode_wif(key, MAINNET)
        decoded, version, compressed = decode_wif(wif)
        assert decoded == key
        assert version == MAINNET.wif_version
        assert compressed
