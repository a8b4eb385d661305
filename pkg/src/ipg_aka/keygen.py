"""Dynamic 256-bit key derivation from a shared grid.

A key sequence fixes which columns contribute payloads (total exactly 256
bits, at most n-1 draws per column).  A small nonlinear feeder walks the
sequence and picks the row for each draw; the epoch is mixed into the feeder
initialization so every epoch selects and orders the material differently.
The assembled selection is finally run through a keyed mix so distinct
selections yield statistically independent keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cgrid import CGrid
from .errors import (
    ColumnExhausted,
    GridTooSmall,
    InsufficientSample,
    MalformedGridFile,
    NoCompositionFound,
    SequenceGridMismatch,
)
from .prf import ByteStream, prf, seed_bytes

KEY_BITS = 256
KSEQ_MAGIC = "KSEQ v1"

_M64 = (1 << 64) - 1
# Re-seed constant for a dead accumulator; any fixed odd value works.
_ODD_RESEED = 0x9E3779B97F4A7C15
# Inner counter period; the outer counter steps when the inner one wraps.
_J_PERIOD = 64


@dataclass(frozen=True)
class KeySequence:
    """Ordered column indices (1-based) whose widths sum to exactly 256 bits."""

    entries: tuple[int, ...]
    grid_id: str
    sequence_id: str


@dataclass(frozen=True)
class FeederState:
    """Nonlinear feeder registers: two 64-bit accumulators plus loop counters.

    x and y are never both zero; initialization forces each odd and a dead
    x is re-seeded with a fixed odd constant.
    """

    x: int
    y: int
    i: int
    j: int


@dataclass(frozen=True)
class LteKey:
    bits: bytes  # exactly 32 bytes
    derived_from: tuple[str, str, int]  # (grid_id, sequence_id, epoch)


def feeder_step(state: FeederState) -> tuple[FeederState, int]:
    """One feeder iteration: returns the next state and a selector in [0, 4).

    y' = y*x + y + x and x' = (x*y' + i) * (1024 + i) * (i*j), both wrapped
    to 64 bits; the selector is x' mod 4 taken before the dead-value re-seed.
    """
    y2 = (state.y * state.x + state.y + state.x) & _M64
    x_raw = ((state.x * y2 + state.i) * (1024 + state.i) * (state.i * state.j)) & _M64
    selector = x_raw & 3
    x2 = x_raw if x_raw != 0 else _ODD_RESEED
    j2 = state.j + 1
    i2 = state.i
    if j2 > _J_PERIOD:
        j2 = 1
        i2 += 1
    return FeederState(x=x2, y=y2, i=i2, j=j2), selector


def form_key_sequence(grid: CGrid, seed: int | bytes) -> KeySequence:
    """Pick a column composition summing to 256 bits, then order it by seed.

    Composition search prefers wider columns first and backtracks, so the
    default 5x5 grid always lands on four 24-bit, four + four 16-bit, and
    four 8-bit draws.  Raises GridTooSmall when usable capacity is under 256
    bits and NoCompositionFound when no bounded combination reaches 256.
    """
    if grid.usable_bits() < KEY_BITS:
        raise GridTooSmall(
            f"grid usable capacity {grid.usable_bits()} bits < {KEY_BITS}"
        )

    n = grid.n
    cap = n - 1  # usable cells per column (one Null each)
    order = sorted(range(n), key=lambda c: (-grid.widths[c], c))

    def solve(idx: int, remaining: int) -> dict[int, int] | None:
        if remaining == 0:
            return {}
        if idx == len(order):
            return None
        c = order[idx]
        w = grid.widths[c]
        for take in range(min(cap, remaining // w), -1, -1):
            rest = solve(idx + 1, remaining - take * w)
            if rest is not None:
                if take:
                    rest = dict(rest)
                    rest[c] = take
                return rest
        return None

    counts = solve(0, KEY_BITS)
    if counts is None:
        raise NoCompositionFound(
            f"no column composition reaches {KEY_BITS} bits with <= {cap} draws per column"
        )

    entries = []
    for c in order:
        entries.extend([c + 1] * counts.get(c, 0))
    stream = ByteStream(seed, b"kseq" + grid.grid_id.encode("ascii"))
    stream.shuffle(entries)

    entries_t = tuple(entries)
    return KeySequence(
        entries=entries_t,
        grid_id=grid.grid_id,
        sequence_id=_sequence_id(grid.grid_id, entries_t),
    )


def _sequence_id(grid_id: str, entries: tuple[int, ...]) -> str:
    import hashlib

    body = grid_id + ":" + ",".join(str(e) for e in entries)
    return hashlib.sha256(body.encode("ascii")).hexdigest()[:16]


def _check_sequence(grid: CGrid, ks: KeySequence) -> None:
    if ks.grid_id != grid.grid_id:
        raise SequenceGridMismatch(
            f"sequence bound to grid {ks.grid_id}, derivation grid is {grid.grid_id}"
        )
    if not ks.entries:
        raise SequenceGridMismatch("empty key sequence")
    total = 0
    per_col: dict[int, int] = {}
    for e in ks.entries:
        if not 1 <= e <= grid.n:
            raise SequenceGridMismatch(f"entry column {e} outside 1..{grid.n}")
        total += grid.column_width(e)
        per_col[e] = per_col.get(e, 0) + 1
    if total != KEY_BITS:
        raise SequenceGridMismatch(f"entry widths sum to {total} bits, need {KEY_BITS}")
    for col, cnt in per_col.items():
        if cnt > grid.n - 1:
            raise SequenceGridMismatch(
                f"column {col} drawn {cnt} times, limit {grid.n - 1}"
            )


def _init_feeder(feeder_seed: int, epoch: int) -> FeederState:
    # Split one PRF output into the two accumulators; forcing each odd keeps
    # the recurrence away from the all-zero fixed point.
    digest = prf(seed_bytes(feeder_seed), b"feeder-init", epoch.to_bytes(8, "big"))
    u = int.from_bytes(digest[:8], "big")
    x = (u & 0xFFFFFFFF) | 1
    y = (u >> 32) | 1
    return FeederState(x=x, y=y, i=1, j=1)


def derive_lte_key_traced(
    grid: CGrid, ks: KeySequence, feeder_seed: int, epoch: int
) -> tuple[LteKey, tuple[tuple[int, int], ...]]:
    """derive_lte_key plus the ordered (row, col) cells it consumed."""
    _check_sequence(grid, ks)
    n = grid.n
    state = _init_feeder(feeder_seed, epoch)
    consumed: set[tuple[int, int]] = set()
    trace: list[tuple[int, int]] = []
    assembly = bytearray()
    prev_col: int | None = None

    for entry in ks.entries:
        want_width = grid.column_width(entry)
        target = entry
        if prev_col is not None and grid.column_width(prev_col) == want_width:
            # Equal-width follow-up draws bounce to the mirror of the column
            # just consumed; the center column mirrors to itself.
            target = grid.mirror_column(prev_col)

        # Candidate columns all share the entry's width; the remap target is
        # tried first, then the literal entry, then the rest of the width
        # class so a crafted ordering cannot strand the derivation.
        candidates = [target, entry]
        for c in range(1, n + 1):
            if grid.column_width(c) == want_width and c not in candidates:
                candidates.append(c)
        seen = set()
        candidates = [c for c in candidates if not (c in seen or seen.add(c))]

        state, selector = feeder_step(state)

        chosen: tuple[int, int] | None = None
        for col in candidates:
            for step in range(n):
                row = ((selector + step) % n) + 1
                cell = grid.cell(row, col)
                if cell.is_null or (row, col) in consumed:
                    continue
                chosen = (row, col)
                break
            if chosen is not None:
                break
        if chosen is None:
            raise ColumnExhausted(
                f"no free {want_width}-bit cell for entry column {entry}"
            )

        row, col = chosen
        consumed.add(chosen)
        trace.append(chosen)
        assembly += grid.cell(row, col).payload
        prev_col = col

    assert len(assembly) * 8 == KEY_BITS
    # Keyed mix: epochs reuse a finite payload pool, so the raw selection is
    # not statistically independent across epochs.  Mixing keeps agreement
    # (pure function of shared inputs) while making distinct selections give
    # uncorrelated keys; the epoch in the context rules out collisions even
    # for coinciding selections.
    bits = prf(bytes(assembly), b"ltek", epoch.to_bytes(8, "big"))
    key = LteKey(bits=bits, derived_from=(grid.grid_id, ks.sequence_id, epoch))
    return key, tuple(trace)


def derive_lte_key(grid: CGrid, ks: KeySequence, feeder_seed: int, epoch: int) -> LteKey:
    key, _ = derive_lte_key_traced(grid, ks, feeder_seed, epoch)
    return key


def key_refresh_due(epoch_started_at: int, ttl: int, now: int) -> bool:
    """True once the key age reaches the ttl; the boundary itself is due."""
    return now - epoch_started_at >= ttl


### key sequence serialization

def serialize_key_sequence(ks: KeySequence) -> bytes:
    lines = [
        KSEQ_MAGIC,
        f"grid={ks.grid_id}",
        "entries=" + ",".join(str(e) for e in ks.entries),
    ]
    return ("\n".join(lines) + "\n").encode("ascii")


def deserialize_key_sequence(data: bytes) -> KeySequence:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as e:
        raise MalformedGridFile(f"not ASCII text: {e}") from None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 3 or lines[0] != KSEQ_MAGIC:
        raise MalformedGridFile("missing KSEQ v1 header")
    if not lines[1].startswith("grid="):
        raise MalformedGridFile("second line must be grid=<grid id>")
    grid_id = lines[1][len("grid="):]
    if not lines[2].startswith("entries="):
        raise MalformedGridFile("third line must be entries=<comma list>")
    try:
        entries = tuple(int(e) for e in lines[2][len("entries="):].split(","))
    except ValueError:
        raise MalformedGridFile(f"bad entries line {lines[2]!r}") from None
    return KeySequence(
        entries=entries, grid_id=grid_id, sequence_id=_sequence_id(grid_id, entries)
    )


### statistical quality checks

@dataclass(frozen=True)
class StatTest:
    name: str
    statistic: float
    p_value: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class StatReport:
    tests: tuple[StatTest, ...]
    hamming_mean: float
    collisions: int

    @property
    def all_passed(self) -> bool:
        return all(t.passed for t in self.tests)

    def failed_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tests if not t.passed)


def randomness_suite(keys: list[LteKey], significance: float = 0.01) -> StatReport:
    """Frequency, runs, and two-bit serial tests over the concatenated keys.

    Needs at least 100 keys; also reports the mean Hamming distance between
    consecutive keys (about 128 for independent 256-bit keys) and the number
    of exact consecutive collisions.
    """
    if len(keys) < 100:
        raise InsufficientSample(f"need >= 100 keys, got {len(keys)}")

    blob = b"".join(k.bits for k in keys)
    nbits = len(blob) * 8
    v = int.from_bytes(blob, "big")

    tests = [
        _monobit(v, nbits, significance),
        _runs(v, nbits, significance),
        _serial2(v, nbits, significance),
    ]

    distances = []
    collisions = 0
    prev = None
    for k in keys:
        cur = int.from_bytes(k.bits, "big")
        if prev is not None:
            d = (prev ^ cur).bit_count()
            distances.append(d)
            if d == 0:
                collisions += 1
        prev = cur
    hamming_mean = sum(distances) / len(distances)

    return StatReport(tests=tuple(tests), hamming_mean=hamming_mean, collisions=collisions)


def _monobit(v: int, n: int, alpha: float) -> StatTest:
    ones = v.bit_count()
    s = abs(2 * ones - n) / math.sqrt(n)
    p = math.erfc(s / math.sqrt(2))
    return StatTest("monobit", s, p, alpha, p >= alpha)


def _runs(v: int, n: int, alpha: float) -> StatTest:
    ones = v.bit_count()
    pi = ones / n
    if abs(pi - 0.5) >= 2 / math.sqrt(n):
        # Frequency precondition failed; the runs statistic is meaningless.
        return StatTest("runs", float("inf"), 0.0, alpha, False)
    transitions = ((v ^ (v >> 1)) & ((1 << (n - 1)) - 1)).bit_count()
    vn = transitions + 1
    num = abs(vn - 2 * n * pi * (1 - pi))
    den = 2 * math.sqrt(2 * n) * pi * (1 - pi)
    p = math.erfc(num / den)
    return StatTest("runs", vn, p, alpha, p >= alpha)


def _serial2(v: int, n: int, alpha: float) -> StatTest:
    """Two-bit serial test with wraparound; both component p-values must pass."""
    mask = (1 << n) - 1
    # w aligns bit i with its cyclic successor bit i+1.
    w = ((v << 1) | (v >> (n - 1))) & mask
    n11 = (v & w).bit_count()
    n10 = (v & ~w & mask).bit_count()
    n01 = (~v & w & mask).bit_count()
    n00 = (~v & ~w & mask).bit_count()
    ones = v.bit_count()
    zeros = n - ones

    psi2 = (4 / n) * (n00 * n00 + n01 * n01 + n10 * n10 + n11 * n11) - n
    psi1 = (2 / n) * (ones * ones + zeros * zeros) - n
    d1 = psi2 - psi1
    d2 = psi2 - 2 * psi1  # psi0 is identically zero

    p1 = math.exp(-max(d1, 0.0) / 2)
    p2 = math.erfc(math.sqrt(max(d2, 0.0) / 2))
    passed = p1 >= alpha and p2 >= alpha
    return StatTest("serial", d1, min(p1, p2), alpha, passed)
