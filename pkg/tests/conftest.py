import pytest

from stillpos.app import build_sim_stack
from stillpos.simnode.scenario import ScenarioRunner

# BIP32 test vector 1 (seed 000102030405060708090a0b0c0d0e0f), recomputed
# with an independent implementation before this suite was written.
VECTOR1_SEED = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
VECTOR1 = {
    "m": (
        "xprv9s21ZrQH143K3QTDL4LXw2F7HEK3wJUD2nW2nRk4stbPy6cq3jPPqjiChkVvvNKmPGJxWUtg"
        "6LnF5kejMRNNU3TGtRBeJgk33yuGBxrMPHi",
        "xpub661MyMwAqRbcFtXgS5sYJABqqG9YLmC4Q1Rdap9gSE8NqtwybGhePY2gZ29ESFjqJoCu1Rup"
        "je8YtGqsefD265TMg7usUDFdp6W1EGMcet8",
    ),
    "m/0h": (
        "xprv9uHRZZhk6KAJC1avXpDAp4MDc3sQKNxDiPvvkX8Br5ngLNv1TxvUxt4cV1rGL5hj6KCesnDY"
        "Uhd7oWgT11eZG7XnxHrnYeSvkzY7d2bhkJ7",
        "xpub68Gmy5EdvgibQVfPdqkBBCHxA5htiqg55crXYuXoQRKfDBFA1WEjWgP6LHhwBZeNK1VTsfTF"
        "UHCdrfp1bgwQ9xv5ski8PX9rL2dZXvgGDnw",
    ),
    "m/0h/1": (
        "xprv9wTYmMFdV23N2TdNG573QoEsfRrWKQgWeibmLntzniatZvR9BmLnvSxqu53Kw1UmYPxLgboy"
        "ZQaXwTCg8MSY3H2EU4pWcQDnRnrVA1xe8fs",
        "xpub6ASuArnXKPbfEwhqN6e3mwBcDTgzisQN1wXN9BJcM47sSikHjJf3UFHKkNAWbWMiGj7Wf5uM"
        "ash7SyYq527Hqck2AxYysAA7xmALppuCkwQ",
    ),
}


@pytest.fixture
def sim_stack(tmp_path):
    stack = build_sim_stack(str(tmp_path / "stack"))
    yield stack
    stack.ledger.close()


@pytest.fixture
def runner(sim_stack):
    return ScenarioRunner(sim_stack)
