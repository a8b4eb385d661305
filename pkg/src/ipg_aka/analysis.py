"""Security-quantity formulas and the desk-scale benchmark driver.

Every security quantity is computed in exact arithmetic (int / Fraction);
values like 2**360 must never pass through a float.  Benchmarks emit CSV
rows; wall-clock rows are flagged non-deterministic, count rows are exact
and reproduce bit-for-bit under a fixed seed.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from fractions import Fraction

from .cgrid import CGrid, generate_grid
from .errors import ConfigInvalid, EmptyInput, ZeroLifetime
from .keygen import derive_lte_key, form_key_sequence
from .protocol import Protocol, provision, run_session

ALPHABET_SIZE = 26
DEFAULT_SECURITY_LEVEL = 1 << 256


@dataclass(frozen=True)
class GridComplexityParams:
    """Inputs to the breach-time estimate for one grid shape."""

    mu_b: tuple[int, ...]  # per-column payload width exponents
    e_c: int  # elements per column
    e_r: int  # elements per row
    n_v: int  # null count
    n: int  # dimension
    e: int = ALPHABET_SIZE

    def __post_init__(self):
        if not self.mu_b or any(m <= 0 for m in self.mu_b):
            raise ConfigInvalid("per-column exponents must be positive")
        for name in ("e_c", "e_r", "n", "e"):
            if getattr(self, name) <= 0:
                raise ConfigInvalid(f"{name} must be positive")
        if self.n_v < 0:  # zero nulls is a degenerate but expressible shape
            raise ConfigInvalid("n_v must be non-negative")

    @classmethod
    def from_grid(cls, grid: CGrid) -> "GridComplexityParams":
        return cls(
            mu_b=grid.widths, e_c=grid.n, e_r=grid.n, n_v=grid.n, n=grid.n
        )


def breach_time(p: GridComplexityParams) -> int:
    """Work to defeat every column: per-column guessing cost, summed."""
    base = p.e_c * p.e_r * p.e * p.n_v
    return sum((1 << m) * base for m in p.mu_b)


def single_position_cost(mu_b: int, n: int) -> int:
    """Work to pin down one occupied cell by exhaustive guessing."""
    return (1 << mu_b) * n * n * ALPHABET_SIZE * n


def total_compromise_time(position_times: list[int]) -> int:
    if not position_times:
        raise EmptyInput("no per-position costs supplied")
    return sum(position_times)


def keyspace_complexity(grid: CGrid) -> int:
    """Size of the space an attacker must search to recover the whole grid."""
    return 1 << grid.capacity_bits()


def key_lifetime(
    breach_iterations: int, ks_iterations: int, grid_complexity: int
) -> int:
    for name, v in (
        ("breach_iterations", breach_iterations),
        ("ks_iterations", ks_iterations),
        ("grid_complexity", grid_complexity),
    ):
        if v <= 0:
            raise ConfigInvalid(f"{name} must be positive")
    return breach_iterations * ks_iterations * grid_complexity


def throughput(messages: int, security_level: int, lifetime: int) -> Fraction:
    if lifetime <= 0:
        raise ZeroLifetime("lifetime must be positive")
    return Fraction(messages * security_level, lifetime)


def unique_key_count(e_c: int, n_c: int, n_mc: int, e: int = ALPHABET_SIZE) -> int:
    if e_c < 1:
        raise ConfigInvalid("e_c must be at least 1")
    return (e_c - 1) * n_c * n_mc * e


### benchmarks

@dataclass(frozen=True)
class BenchConfig:
    protocols: tuple[str, ...] = ("ipg", "eps")
    subscribers: tuple[int, ...] = (100,)
    grid_sizes: tuple[int, ...] = (5,)
    iterations: int = 10
    density_per_km2: int = 0
    seed: int = 0
    elgamal_bits: int = 1024

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigInvalid("iterations must be at least 1")
        if not self.protocols:
            raise ConfigInvalid("at least one protocol required")
        for p in self.protocols:
            if p not in ("ipg", "eps"):
                raise ConfigInvalid(f"unknown protocol {p!r}")
        if not self.subscribers or any(s < 1 for s in self.subscribers):
            raise ConfigInvalid("subscriber counts must be positive")
        if not self.grid_sizes or any(g < 5 or g % 2 == 0 for g in self.grid_sizes):
            raise ConfigInvalid("grid sizes must be odd and at least 5")

    @classmethod
    def parse(cls, text: str) -> "BenchConfig":
        fields: dict = {}
        lists = {"protocols": str, "subscribers": int, "grid_sizes": int}
        scalars = {
            "iterations": int,
            "density_per_km2": int,
            "seed": lambda v: int(v, 0),
            "elgamal_bits": int,
        }
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigInvalid(f"line {lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            try:
                if key in lists:
                    conv = lists[key]
                    fields[key] = tuple(conv(part) for part in value.split(":") if part)
                elif key in scalars:
                    fields[key] = scalars[key](value)
                else:
                    raise ConfigInvalid(f"line {lineno}: unknown key {key!r}")
            except ValueError:
                raise ConfigInvalid(f"line {lineno}: bad value {value!r}") from None
        return cls(**fields)


@dataclass(frozen=True)
class BenchRow:
    protocol: str
    subscribers: int
    grid_n: int
    metric: str
    unit: str
    value: object  # int, float, or Fraction
    deterministic: bool


def _cell_rows(
    protocol: str, subscribers: int, grid_n: int, cfg: BenchConfig
) -> list[BenchRow]:
    proto_enum = Protocol(protocol)
    cell_tag = subscribers * 1000003 + grid_n * 101 + (0 if protocol == "ipg" else 1)
    prov = provision(
        seed=cfg.seed ^ cell_tag,
        protocol=proto_enum,
        grid_n=grid_n if proto_enum == Protocol.IPG else 5,
        elgamal_bits=cfg.elgamal_bits,
    )
    from .simnet import SimNet, collect_metrics

    net = SimNet(seed=cfg.seed)
    wall: list[float] = []
    last = None
    for _ in range(cfg.iterations):
        t0 = time.perf_counter()
        result = run_session(prov, net)
        wall.append(time.perf_counter() - t0)
        if not result.authenticated:
            raise ConfigInvalid(
                f"benchmark session failed: {result.reason.label if result.reason else '?'}"
            )
        last = result

    metrics = collect_metrics(last.trace)
    mean_ms = 1000.0 * sum(wall) / len(wall)
    ops = {
        "ue": sum(prov.ue.ops.values()),
        "mme": sum(prov.mme.ops.values()),
        "hss": sum(prov.hss.ops.values()),
    }
    reported_grid = grid_n if proto_enum == Protocol.IPG else 0

    def row(metric, unit, value, deterministic):
        return BenchRow(
            protocol=protocol,
            subscribers=subscribers,
            grid_n=reported_grid,
            metric=metric,
            unit=unit,
            value=value,
            deterministic=deterministic,
        )

    rows = [
        row("auth_wall", "ms", mean_ms, False),
        row("auth_wall_total", "ms", mean_ms * subscribers, False),
        row("messages_per_session", "count", last.message_count, True),
        row("bytes_per_session", "bytes", metrics.bytes_total, True),
    ]
    for entity in ("ue", "mme", "hss"):
        per_session = Fraction(ops[entity], cfg.iterations)
        rows.append(row(f"ops_{entity}_per_session", "count", per_session, True))
        rows.append(row(f"ops_{entity}_load", "count", per_session * subscribers, True))
    if proto_enum == Protocol.IPG:
        rows.append(row("keygen_wall", "ms", _keygen_wall_ms(grid_n, cfg), False))
    return rows


def _keygen_wall_ms(grid_n: int, cfg: BenchConfig, reps: int = 20) -> float:
    """Time to stand up fresh grid material and pull one session key from it."""
    best = None
    for attempt in range(3):
        t0 = time.perf_counter()
        for i in range(reps):
            grid = generate_grid(grid_n, seed=cfg.seed + i)
            ks = form_key_sequence(grid, cfg.seed + i)
            derive_lte_key(grid, ks, cfg.seed + i, epoch=0)
        elapsed = time.perf_counter() - t0
        best = elapsed if best is None else min(best, elapsed)
    return 1000.0 * best / reps


def run_benchmarks(cfg: BenchConfig) -> list[BenchRow]:
    rows: list[BenchRow] = []
    for protocol in cfg.protocols:
        sizes = cfg.grid_sizes if protocol == "ipg" else (cfg.grid_sizes[0],)
        for subscribers in cfg.subscribers:
            for grid_n in sizes:
                rows.extend(_cell_rows(protocol, subscribers, grid_n, cfg))
    return rows


CSV_HEADER = ("protocol", "subscribers", "grid_n", "metric", "unit", "value", "deterministic")


def _fmt_value(value) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(text: str):
    if "/" in text:
        num, _, den = text.partition("/")
        return Fraction(int(num), int(den))
    try:
        return int(text)
    except ValueError:
        return float(text)


def write_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(
            [
                r.protocol,
                r.subscribers,
                r.grid_n,
                r.metric,
                r.unit,
                _fmt_value(r.value),
                "true" if r.deterministic else "false",
            ]
        )
    return buf.getvalue()


def read_csv(text: str) -> list[BenchRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ConfigInvalid("unrecognized CSV header")
    rows = []
    for parts in reader:
        if len(parts) != len(CSV_HEADER):
            raise ConfigInvalid(f"row has {len(parts)} fields")
        rows.append(
            BenchRow(
                protocol=parts[0],
                subscribers=int(parts[1]),
                grid_n=int(parts[2]),
                metric=parts[3],
                unit=parts[4],
                value=_parse_value(parts[5]),
                deterministic=parts[6] == "true",
            )
        )
    return rows
