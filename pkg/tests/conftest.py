import pytest

from ipg_aka import imsi_crypto
from ipg_aka.cgrid import deserialize_grid, generate_grid
from ipg_aka.keygen import form_key_sequence


def _hexpad(byte_value: int, nbytes: int) -> str:
    return byte_value.to_bytes(nbytes, "big").hex()


@pytest.fixture(scope="session")
def grid5():
    return generate_grid(5, seed=11)


@pytest.fixture(scope="session")
def grid7():
    return generate_grid(7, seed=12)


@pytest.fixture(scope="session")
def kseq5(grid5):
    return form_key_sequence(grid5, 21)


@pytest.fixture(scope="session")
def kseq7(grid7):
    return form_key_sequence(grid7, 22)


@pytest.fixture(scope="session")
def published_layout_grid():
    """5x5 grid with the published example's null/symbol layout.

    Null cells sit at (1,1), (2,3), (3,5), (4,2), (5,4); payload bits are
    ours (the layout fixes symbols and structure, not bit values).
    """
    rows = [
        ["NULL", "B:00b1", "E:00c1a1", "H:00d1", "T:a1"],
        ["A:02", "M:00b2", "NULL", "C:00d2", "D:a2"],
        ["Q:03", "F:00b3", "J:00c3a3", "G:00d3", "NULL"],
        ["V:04", "NULL", "S:00c4a4", "L:00d4", "K:a4"],
        ["R:05", "W:00b5", "B:00c5a5", "NULL", "S:a5"],
    ]
    text = "CGRID v1\nn=5\nwidths=8,16,24,16,8\n"
    text += "".join(" ".join(row) + "\n" for row in rows)
    return deserialize_grid(text.encode("ascii"))


@pytest.fixture(scope="session")
def eg_small():
    """Small parameter set for fast handshake-free crypto tests."""
    return imsi_crypto.gen_params(16, seed=5)


@pytest.fixture(scope="session")
def eg_768():
    return imsi_crypto.gen_params(768, seed=5)


@pytest.fixture(scope="session")
def shared_crypto_768(eg_768):
    priv, pub = imsi_crypto.authority_keypair(5)
    params, secret = eg_768
    return (priv, pub, params, secret)
