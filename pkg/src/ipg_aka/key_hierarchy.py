"""Session key hierarchy rooted in the dynamic 256-bit key.

A single labeled PRF (HMAC-SHA-256) replaces the classic per-function
algorithm set: authentication material (MAC, AK, CK/IK, XRES), the access
security management key, and the full lower tree (NAS, eNB, RRC, UP keys
plus the NH chain) all derive from it under globally distinct labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import NccOverflow
from .prf import prf

SQN_BYTES = 6  # 48-bit sequence counter
AK_BYTES = 6
MAC_BYTES = 8
RES_BYTES = 8
RAND_BYTES = 16
SNID_BYTES = 3
AMF = b"\x80\x00"  # fixed 16-bit management field
NCC_MAX = 7
DEFAULT_RESYNC_WINDOW = 1024

# Every derivation context in the hierarchy; uniqueness is asserted by tests.
LABELS = {
    "mac": b"mac",
    "ak": b"ak",
    "ck": b"ck",
    "ik": b"ik",
    "res": b"res",
    "asme": b"asme",
    "enb": b"enb",
    "nas-enc": b"nas-enc",
    "nas-int": b"nas-int",
    "rrc-enc": b"rrc-enc",
    "rrc-int": b"rrc-int",
    "up-enc": b"up-enc",
    "up-int": b"up-int",
    "nh": b"nh",
}


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


@dataclass(frozen=True)
class AuthVector:
    rand: bytes
    autn: bytes
    xres: bytes
    k_asme: bytes


@dataclass(frozen=True)
class KeyTree:
    k_asme: bytes
    k_enb: bytes
    k_nas_enc: bytes
    k_nas_int: bytes
    k_rrc_enc: bytes
    k_rrc_int: bytes
    k_up_enc: bytes
    k_up_int: bytes
    nh: bytes
    ncc: int

    def leaves(self) -> dict[str, bytes]:
        return {
            "k_asme": self.k_asme,
            "k_enb": self.k_enb,
            "k_nas_enc": self.k_nas_enc,
            "k_nas_int": self.k_nas_int,
            "k_rrc_enc": self.k_rrc_enc,
            "k_rrc_int": self.k_rrc_int,
            "k_up_enc": self.k_up_enc,
            "k_up_int": self.k_up_int,
            "nh": self.nh,
        }


@dataclass
class SqnState:
    """Monotone 48-bit sequence number with an acceptance window."""

    sqn: int = 0
    resync_window: int = DEFAULT_RESYNC_WINDOW


class VerifyStatus(Enum):
    OK = "ok"
    MAC_FAILURE = "MacFailure"
    SQN_OUT_OF_RANGE = "SqnOutOfRange"


@dataclass(frozen=True)
class VerifyResult:
    status: VerifyStatus
    sqn: int | None = None


def _mac(lte_k: bytes, rand: bytes, sqn6: bytes) -> bytes:
    return prf(lte_k, LABELS["mac"], rand, sqn6)[:MAC_BYTES]


def anonymity_key(lte_k: bytes, rand: bytes) -> bytes:
    return prf(lte_k, LABELS["ak"], rand)[:AK_BYTES]


def compute_res(lte_k: bytes, rand: bytes) -> bytes:
    return prf(lte_k, LABELS["res"], rand)[:RES_BYTES]


def cipher_keys(lte_k: bytes, rand: bytes) -> tuple[bytes, bytes]:
    ck = prf(lte_k, LABELS["ck"], rand)
    ik = prf(lte_k, LABELS["ik"], rand)
    return ck, ik


def kasme(lte_k: bytes, rand: bytes, sqn: int, snid: bytes) -> bytes:
    """K_ASME from CK || IK, bound to the serving network and concealed SQN."""
    if len(snid) != SNID_BYTES:
        raise ValueError(f"snid must be {SNID_BYTES} bytes")
    ck, ik = cipher_keys(lte_k, rand)
    sqn6 = sqn.to_bytes(SQN_BYTES, "big")
    sqn_ak = _xor(sqn6, anonymity_key(lte_k, rand))
    return prf(ck + ik, LABELS["asme"], snid, sqn_ak)


def build_auth_vector(lte_k: bytes, sqn: int, snid: bytes, rand: bytes) -> AuthVector:
    """Network-side vector: RAND, AUTN = (SQN xor AK) || AMF || MAC, XRES, K_ASME."""
    if len(lte_k) != 32:
        raise ValueError("root key must be 32 bytes")
    if len(rand) != RAND_BYTES:
        raise ValueError(f"rand must be {RAND_BYTES} bytes")
    if not 0 <= sqn < 1 << (8 * SQN_BYTES):
        raise ValueError("sqn outside 48-bit range")
    sqn6 = sqn.to_bytes(SQN_BYTES, "big")
    ak = anonymity_key(lte_k, rand)
    autn = _xor(sqn6, ak) + AMF + _mac(lte_k, rand, sqn6)
    return AuthVector(
        rand=rand,
        autn=autn,
        xres=compute_res(lte_k, rand),
        k_asme=kasme(lte_k, rand, sqn, snid),
    )


def verify_autn(lte_k: bytes, rand: bytes, autn: bytes, sqn_state: SqnState) -> VerifyResult:
    """Subscriber-side challenge check.

    Recomputes the MAC over the recovered SQN first; only a MAC-valid
    challenge gets its SQN tested against the monotone window.  Success
    advances the state.
    """
    if len(autn) != SQN_BYTES + len(AMF) + MAC_BYTES:
        return VerifyResult(VerifyStatus.MAC_FAILURE)
    sqn_ak, mac = autn[:SQN_BYTES], autn[SQN_BYTES + len(AMF):]
    sqn6 = _xor(sqn_ak, anonymity_key(lte_k, rand))
    if _mac(lte_k, rand, sqn6) != mac:
        return VerifyResult(VerifyStatus.MAC_FAILURE)
    sqn = int.from_bytes(sqn6, "big")
    if not sqn_state.sqn < sqn <= sqn_state.sqn + sqn_state.resync_window:
        return VerifyResult(VerifyStatus.SQN_OUT_OF_RANGE)
    sqn_state.sqn = sqn
    return VerifyResult(VerifyStatus.OK, sqn=sqn)


def derive_key_tree(k_asme: bytes, uplink_nas_count: int) -> KeyTree:
    """Full lower hierarchy for a fresh connection (NCC starts at zero)."""
    count = uplink_nas_count.to_bytes(4, "big")
    k_enb = prf(k_asme, LABELS["enb"], count)
    nh = prf(k_asme, LABELS["nh"], k_enb)  # initial virtual hop
    return KeyTree(
        k_asme=k_asme,
        k_enb=k_enb,
        k_nas_enc=prf(k_asme, LABELS["nas-enc"]),
        k_nas_int=prf(k_asme, LABELS["nas-int"]),
        k_rrc_enc=prf(k_enb, LABELS["rrc-enc"]),
        k_rrc_int=prf(k_enb, LABELS["rrc-int"]),
        k_up_enc=prf(k_enb, LABELS["up-enc"]),
        k_up_int=prf(k_enb, LABELS["up-int"]),
        nh=nh,
        ncc=0,
    )


def nh_advance(k_asme: bytes, nh: bytes, ncc: int) -> tuple[bytes, int]:
    """One handover hop: chain the NH value and bump the counter."""
    if not 0 <= ncc <= NCC_MAX:
        raise NccOverflow(f"ncc {ncc} outside [0, {NCC_MAX}]")
    if ncc == NCC_MAX:
        raise NccOverflow(f"ncc would wrap past {NCC_MAX}")
    return prf(k_asme, LABELS["nh"], nh), ncc + 1
