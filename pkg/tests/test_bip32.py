import pytest
from hypothesis import given, settings, strategies as st

from stillpos.errors import ValidationError
from stillpos.keystore import ExtendedKey, HARDENED, MAINNET, REGTEST, TESTNET

from conftest import VECTOR1, VECTOR1_SEED


class TestMasterGeneration:
    def test_same_entropy_same_key(self):
        a = ExtendedKey.from_seed(b"\x07" * 32, MAINNET)
        b = ExtendedKey.from_seed(b"\x07" * 32, MAINNET)
        assert a == b
        assert a.serialize() == b.serialize()

    @pytest.mark.parametrize("size", [0, 8, 15, 65, 128])
    def test_entropy_out_of_range(self, size):
        with pytest.raises(ValidationError):
            ExtendedKey.from_seed(b"\x01" * size, MAINNET)

    @pytest.mark.parametrize("size", [16, 32, 64])
    def test_entropy_in_range(self, size):
        key = ExtendedKey.from_seed(b"\x01" * size, MAINNET)
        assert key.depth == 0
        assert key.is_private

    def test_vector1_master(self):
        master = ExtendedKey.from_seed(VECTOR1_SEED, MAINNET)
        xprv, xpub = VECTOR1["m"]
        assert master.serialize() == xprv
        assert master.neuter().serialize() == xpub
        assert master.fingerprint.hex() == "3442193e"


class TestDerivation:
    def test_vector1_chain(self):
        master = ExtendedKey.from_seed(VECTOR1_SEED, MAINNET)
        node_0h = master.derive_child(0, hardened=True)
        xprv, xpub = VECTOR1["m/0h"]
        assert node_0h.serialize() == xprv
        assert node_0h.neuter().serialize() == xpub

        node_0h_1 = node_0h.derive_child(1)
        xprv, xpub = VECTOR1["m/0h/1"]
        assert node_0h_1.serialize() == xprv
        assert node_0h_1.neuter().serialize() == xpub

    def test_derivation_deterministic(self):
        parent = ExtendedKey.from_seed(b"\x22" * 32, MAINNET)
        assert parent.derive_child(0) == parent.derive_child(0)

    def test_public_private_commutation(self):
        parent = ExtendedKey.from_seed(VECTOR1_SEED, MAINNET).derive_child(0, hardened=True)
        for index in (0, 1, 5, 1000, HARDENED - 1):
            via_private = parent.derive_child(index).neuter()
            via_public = parent.neuter().derive_child(index)
            assert via_private.serialize() == via_public.serialize()

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=HARDENED - 1))
    def test_commutation_property(self, index):
        parent = ExtendedKey.from_seed(b"\x33" * 32, TESTNET)
        assert (
            parent.derive_child(index).neuter().serialize()
            == parent.neuter().derive_child(index).serialize()
        )

    def test_hardened_from_public_fails(self):
        public = ExtendedKey.from_seed(b"\x11" * 32, MAINNET).neuter()
        with pytest.raises(ValidationError):
            public.derive_child(0, hardened=True)

    def test_index_range_enforced(self):
        key = ExtendedKey.from_seed(b"\x11" * 32, MAINNET)
        with pytest.raises(ValidationError):
            key.derive_child(HARDENED)
        with pytest.raises(ValidationError):
            key.derive_child(-1)

    def test_child_metadata(self):
        master = ExtendedKey.from_seed(b"\x44" * 32, MAINNET)
        child = master.derive_child(7, hardened=True)
        assert child.depth == 1
        assert child.child_number == 7 | HARDENED
        assert child.parent_fingerprint == master.fingerprint


class TestSerialization:
    def test_parse_round_trip(self):
        node = ExtendedKey.from_seed(b"\x55" * 32, MAINNET).derive_child(3)
        for key in (node, node.neuter()):
            text = key.serialize()
            assert ExtendedKey.parse(text).serialize() == text

    def test_regtest_shares_testnet_encoding(self):
        reg = ExtendedKey.from_seed(b"\x66" * 32, REGTEST)
        test = ExtendedKey.from_seed(b"\x66" * 32, TESTNET)
        assert reg.serialize() == test.serialize()
        parsed = ExtendedKey.parse(reg.serialize(), REGTEST)
        assert parsed.network is REGTEST

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValidationError):
            ExtendedKey.parse("xprvNotAKey")
        with pytest.raises(ValidationError):
            ExtendedKey.parse("")

    def test_parse_rejects_wrong_network(self):
        mainnet_key = ExtendedKey.from_seed(b"\x77" * 32, MAINNET).serialize()
        with pytest.raises(ValidationError):
            ExtendedKey.parse(mainnet_key, TESTNET)

    def test_depth_zero_invariant(self):
        with pytest.raises(ValidationError):
            ExtendedKey(
                network=MAINNET,
                depth=0,
                parent_fingerprint=b"\x01\x02\x03\x04",
                child_number=0,
                chain_code=b"\x00" * 32,
                key_material=b"\x01" + b"\x00" * 31,
                is_private=True,
            )
