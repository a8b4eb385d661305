"""IMSI concealment: multiplicative-group ElGamal over a safe prime.

The serving network publishes (p, alpha, beta) signed together with a
timestamp; the subscriber splits its 15-digit identity into blocks below p
and sends each block as the pair (alpha^k, m * beta^k) mod p with a fresh
ephemeral k per block.  Only the holder of the secret exponent s recovers m.
"""

from __future__ import annotations

from dataclasses import dataclass

import sympy

try:
    import gmpy2 as _gmpy2
except ImportError:  # pragma: no cover
    _gmpy2 = None
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import (
    BlockOutOfRange,
    BlockTooLargeForModulus,
    EphemeralOutOfRange,
    NonInvertibleElement,
    PrimeGenerationFailed,
)
from .prf import ByteStream, seed_bytes

IMSI_DIGITS = 15
DEFAULT_BIT_LENGTH = 2048
DEFAULT_FRESHNESS_WINDOW = 30
_MAX_PRIME_ATTEMPTS = 200_000


def _powmod(base: int, exp: int, mod: int) -> int:
    if _gmpy2 is not None:
        return int(_gmpy2.powmod(base, exp, mod))
    return pow(base, exp, mod)


def _invmod(value: int, mod: int) -> int:
    """Modular inverse; ValueError when none exists."""
    if _gmpy2 is not None:
        try:
            return int(_gmpy2.invert(value, mod))
        except ZeroDivisionError:
            raise ValueError("base is not invertible for the given modulus") from None
    return pow(value, -1, mod)

# Fixed safe-prime groups (generator 2) for the operational sizes, so large
# parameter sets need no prime search.  Both constants are verified as safe
# primes by the test suite.
_FIXED_GROUPS: dict[int, int] = {
    768: int(
        "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
        "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
        "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
        "E485B576625E7EC6F44C42E9A63A3620FFFFFFFFFFFFFFFF",
        16,
    ),
    1024: int(
        "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
        "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
        "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
        "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
        "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE65381"
        "FFFFFFFFFFFFFFFF",
        16,
    ),
    2048: int(
        "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
        "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
        "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
        "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
        "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3D"
        "C2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
        "83655D23DCA3AD961C62F356208552BB9ED529077096966D"
        "670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
        "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9"
        "DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
        "15728E5A8AACAA68FFFFFFFFFFFFFFFF",
        16,
    ),
}


@dataclass(frozen=True)
class Imsi:
    """15 decimal digits: 3-digit MCC, 2- or 3-digit MNC, MSIN remainder."""

    mcc: str
    mnc: str
    msin: str

    def __post_init__(self):
        if len(self.mcc) != 3 or not self.mcc.isdigit():
            raise ValueError(f"MCC must be 3 digits, got {self.mcc!r}")
        if len(self.mnc) not in (2, 3) or not self.mnc.isdigit():
            raise ValueError(f"MNC must be 2 or 3 digits, got {self.mnc!r}")
        if not self.msin.isdigit():
            raise ValueError(f"MSIN must be decimal digits, got {self.msin!r}")
        if len(self.digits) != IMSI_DIGITS:
            raise ValueError(f"IMSI must be {IMSI_DIGITS} digits, got {self.digits!r}")

    @classmethod
    def parse(cls, digits: str, mnc_digits: int = 2) -> "Imsi":
        if len(digits) != IMSI_DIGITS or not digits.isdigit():
            raise ValueError(f"IMSI must be {IMSI_DIGITS} decimal digits, got {digits!r}")
        if mnc_digits not in (2, 3):
            raise ValueError("mnc_digits must be 2 or 3")
        return cls(
            mcc=digits[:3],
            mnc=digits[3 : 3 + mnc_digits],
            msin=digits[3 + mnc_digits :],
        )

    @property
    def digits(self) -> str:
        return self.mcc + self.mnc + self.msin

    def as_int(self) -> int:
        return int(self.digits)


@dataclass(frozen=True)
class ElGamalParams:
    """Public parameters: modulus p, generator alpha of a subgroup of order n,
    and public key beta = alpha^s mod p."""

    p: int
    alpha: int
    beta: int
    n: int

    def modulus_bytes(self) -> int:
        return (self.p.bit_length() + 7) // 8


@dataclass(frozen=True)
class SecretKey:
    s: int


@dataclass(frozen=True)
class ImsiCiphertext:
    r: int
    t: int
    block_index: int = 0


def gen_params(bit_length: int, seed: int | bytes) -> tuple[ElGamalParams, SecretKey]:
    """Deterministically produce group parameters and a secret exponent.

    p is a safe prime (p = 2q + 1) and alpha generates the order-q subgroup,
    so n = q.  Sizes with a fixed well-known group skip the search; smaller
    test sizes are searched from the seeded stream.  Primality testing is
    delegated to sympy (error probability far below 2^-80).
    """
    if bit_length < 10:
        raise ValueError(f"bit_length must be >= 10, got {bit_length}")

    stream = ByteStream(seed, b"elgamal")

    if bit_length in _FIXED_GROUPS:
        p = _FIXED_GROUPS[bit_length]
        q = (p - 1) // 2
        alpha = 2  # quadratic residue for these groups, so its order is q
    else:
        p = q = 0
        found = False
        for _ in range(_MAX_PRIME_ATTEMPTS):
            cand = int.from_bytes(stream.take((bit_length + 7) // 8), "big")
            cand >>= max(0, cand.bit_length() - (bit_length - 1))
            cand |= 1 << (bit_length - 2)  # force q into [2^(b-2), 2^(b-1))
            cand |= 3  # q = 3 mod 4 makes p = 7 mod 8
            if not sympy.isprime(cand):
                continue
            pc = 2 * cand + 1
            if sympy.isprime(pc):
                q, p = cand, pc
                found = True
                break
        if not found:
            raise PrimeGenerationFailed(
                f"no {bit_length}-bit safe prime after {_MAX_PRIME_ATTEMPTS} attempts"
            )
        alpha = 1
        while alpha == 1:
            h = stream.randint(2, p - 2)
            alpha = _powmod(h, 2, p)  # squares generate the order-q subgroup

    n = q
    s = stream.randint(1, n - 1)
    beta = _powmod(alpha, s, p)
    return ElGamalParams(p=p, alpha=alpha, beta=beta, n=n), SecretKey(s=s)


def encrypt_imsi(
    params: ElGamalParams, imsi_block: int, k: int, block_index: int = 0
) -> ImsiCiphertext:
    """One block: (r, t) = (alpha^k, m * beta^k) mod p.

    The ephemeral k must lie in [1, n-1] and be fresh per block; the block
    itself must lie in [1, p-1].
    """
    if not 1 <= imsi_block <= params.p - 1:
        raise BlockOutOfRange(f"block {imsi_block} outside [1, p-1]")
    if not 1 <= k <= params.n - 1:
        raise EphemeralOutOfRange(f"ephemeral {k} outside [1, n-1] (n={params.n})")
    r = _powmod(params.alpha, k, params.p)
    t = (imsi_block * _powmod(params.beta, k, params.p)) % params.p
    return ImsiCiphertext(r=r, t=t, block_index=block_index)


def decrypt_imsi(params: ElGamalParams, sk: SecretKey, ct: ImsiCiphertext) -> int:
    """Recover m = t * (r^s)^(-1) mod p."""
    if not 0 < ct.r < params.p or not 0 < ct.t < params.p:
        raise NonInvertibleElement(
            f"ciphertext component outside (0, p): r={ct.r}, t={ct.t}"
        )
    shared = _powmod(ct.r, sk.s, params.p)
    try:
        inv = _invmod(shared, params.p)
    except ValueError:
        raise NonInvertibleElement(f"r^s = {shared} has no inverse mod p") from None
    return (ct.t * inv) % params.p


### identity blocking

def _chunk_sizes(p: int) -> list[int]:
    # Largest digit count d with 10^d <= p - 1, so chunk value + 1 stays in range.
    d = len(str(p - 1)) - 1
    while d > 0 and 10**d > p - 1:
        d -= 1
    if d == 0:
        raise BlockTooLargeForModulus(f"modulus {p} cannot hold a single digit block")
    sizes = [d] * (IMSI_DIGITS // d)
    if IMSI_DIGITS % d:
        sizes.append(IMSI_DIGITS % d)
    return sizes


def split_blocks(imsi: Imsi, params: ElGamalParams) -> list[int]:
    """Split the identity into integer blocks in [1, p-1].

    A modulus above 10^15 takes the whole identity as one block equal to the
    IMSI integer.  Smaller moduli chunk the digit string; each chunk value is
    offset by +1 so all-zero chunks stay encryptable.
    """
    if params.p > 10**IMSI_DIGITS:
        value = imsi.as_int()
        if value == 0:
            # The all-zero identity is not a subscriber; there is no block
            # representation for it in [1, p-1] without an offset.
            raise BlockOutOfRange("all-zero IMSI has no single-block encoding")
        return [value]

    digits = imsi.digits
    blocks = []
    pos = 0
    for size in _chunk_sizes(params.p):
        blocks.append(int(digits[pos : pos + size]) + 1)
        pos += size
    if any(not 1 <= b <= params.p - 1 for b in blocks):
        raise BlockTooLargeForModulus(f"block escaped [1, p-1] for p={params.p}")
    return blocks


def join_blocks(blocks: list[int], params: ElGamalParams) -> Imsi:
    """Inverse of split_blocks for the same parameter set."""
    if params.p > 10**IMSI_DIGITS:
        if len(blocks) != 1:
            raise BlockOutOfRange(f"expected 1 block for large modulus, got {len(blocks)}")
        value = blocks[0]
        if not 1 <= value < 10**IMSI_DIGITS:
            raise BlockOutOfRange(f"block {value} is not a 15-digit identity")
        return Imsi.parse(str(value).zfill(IMSI_DIGITS))

    sizes = _chunk_sizes(params.p)
    if len(blocks) != len(sizes):
        raise BlockOutOfRange(f"expected {len(sizes)} blocks, got {len(blocks)}")
    digits = []
    for block, size in zip(blocks, sizes):
        value = block - 1
        if not 0 <= value < 10**size:
            raise BlockOutOfRange(f"block {block} does not decode to {size} digits")
        digits.append(str(value).zfill(size))
    return Imsi.parse("".join(digits))


### signed parameter announcement

@dataclass(frozen=True)
class SignedIdentityRequest:
    params: ElGamalParams
    timestamp: int
    signature: bytes


def _signed_payload(params: ElGamalParams, timestamp: int) -> bytes:
    width = params.modulus_bytes()
    return (
        params.p.to_bytes(width, "big")
        + params.alpha.to_bytes(width, "big")
        + params.beta.to_bytes(width, "big")
        + timestamp.to_bytes(8, "big")
    )


def authority_keypair(seed: int | bytes) -> tuple[Ed25519PrivateKey, Ed25519PublicKey]:
    """Deterministic signing keypair for the parameter-announcement authority."""
    raw = ByteStream(seed, b"authority").take(32)
    priv = Ed25519PrivateKey.from_private_bytes(raw)
    return priv, priv.public_key()


def sign_identity_request(
    authority_key: Ed25519PrivateKey, params: ElGamalParams, timestamp: int
) -> SignedIdentityRequest:
    """Sign p || alpha || beta || timestamp (fixed-width big-endian fields)."""
    sig = authority_key.sign(_signed_payload(params, timestamp))
    return SignedIdentityRequest(params=params, timestamp=timestamp, signature=sig)


def verify_identity_request(
    authority_public: Ed25519PublicKey,
    req: SignedIdentityRequest,
    now: int,
    freshness_window: int = DEFAULT_FRESHNESS_WINDOW,
) -> bool:
    """Signature must verify and the timestamp must be within the window."""
    try:
        authority_public.verify(req.signature, _signed_payload(req.params, req.timestamp))
    except (InvalidSignature, ValueError):
        return False
    return abs(now - req.timestamp) <= freshness_window


### parameter file round-trip

PARAMS_MAGIC = "ELGAMAL v1"
SECRET_MAGIC = "ELGAMAL-SECRET v1"


def save_params(params: ElGamalParams) -> bytes:
    lines = [
        PARAMS_MAGIC,
        f"p={params.p}",
        f"alpha={params.alpha}",
        f"beta={params.beta}",
        f"n={params.n}",
    ]
    return ("\n".join(lines) + "\n").encode("ascii")


def load_params(data: bytes) -> ElGamalParams:
    fields = _load_kv(data, PARAMS_MAGIC, ("p", "alpha", "beta", "n"))
    return ElGamalParams(**fields)


def save_secret(sk: SecretKey) -> bytes:
    return f"{SECRET_MAGIC}\ns={sk.s}\n".encode("ascii")


def load_secret(data: bytes) -> SecretKey:
    fields = _load_kv(data, SECRET_MAGIC, ("s",))
    return SecretKey(**fields)


def _load_kv(data: bytes, magic: str, keys: tuple[str, ...]) -> dict[str, int]:
    lines = [ln for ln in data.decode("ascii").splitlines() if ln.strip()]
    if not lines or lines[0] != magic:
        raise ValueError(f"missing {magic} header")
    out = {}
    for line in lines[1:]:
        k, _, v = line.partition("=")
        if k in keys:
            out[k] = int(v)
    missing = set(keys) - set(out)
    if missing:
        raise ValueError(f"missing fields {sorted(missing)}")
    return out
