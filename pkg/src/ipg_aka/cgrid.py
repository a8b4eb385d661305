"""Character grid (C-GRID): the shared lookup table behind dynamic key generation.

A grid is an n x n matrix of cells (n odd, n >= 5).  Column c holds payloads of
a fixed bit width; widths are positive multiples of 8 and palindromic across
the grid so every column has a mirror of equal width.  Exactly one cell per
row and per column is a Null, i.e. the Null positions form a permutation.
Filled cells carry a cosmetic symbol A-Z plus payload bits of exactly the
column width.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .errors import (
    IndexOutOfRange,
    InvalidGridDimension,
    MalformedGridFile,
    NonPalindromicWidths,
    ValidationFailed,
    WidthCountMismatch,
    WidthNotByteMultiple,
)
from .prf import ByteStream

GRID_MAGIC = "CGRID v1"


def default_widths(n: int) -> tuple[int, ...]:
    """Canonical width profile for an n x n grid: 8,16,... up to the center.

    default_widths(5) == (8, 16, 24, 16, 8); grows by one byte per step.
    """
    return tuple(8 * min(i + 1, n - i) for i in range(n))


def check_dimension(n: int) -> None:
    if n < 5 or n % 2 == 0:
        raise InvalidGridDimension(f"grid dimension must be odd and >= 5, got {n}")


def check_widths(n: int, widths: tuple[int, ...]) -> None:
    if len(widths) != n:
        raise WidthCountMismatch(f"expected {n} column widths, got {len(widths)}")
    for w in widths:
        if w <= 0 or w % 8 != 0:
            raise WidthNotByteMultiple(f"column width {w} is not a positive multiple of 8")
    if tuple(widths) != tuple(reversed(widths)):
        raise NonPalindromicWidths(f"widths {list(widths)} are not palindromic")


@dataclass(frozen=True)
class Cell:
    """One grid cell: Null (no symbol, no payload) or Filled."""

    symbol: str | None
    payload: bytes | None

    @property
    def is_null(self) -> bool:
        return self.symbol is None

    def width_bits(self) -> int:
        return 0 if self.payload is None else len(self.payload) * 8


@dataclass(frozen=True)
class Violation:
    code: str
    row: int | None
    col: int | None
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class CGrid:
    n: int
    widths: tuple[int, ...]
    cells: tuple[tuple[Cell, ...], ...]
    grid_id: str
    created_at: int = field(default=0, compare=False)

    def cell(self, row: int, col: int) -> Cell:
        """1-based lookup; raises IndexOutOfRange outside [1, n]."""
        if not (1 <= row <= self.n and 1 <= col <= self.n):
            raise IndexOutOfRange(f"({row}, {col}) outside 1..{self.n}")
        return self.cells[row - 1][col - 1]

    def capacity_bits(self) -> int:
        """Total payload capacity if every cell were filled: n * sum(widths)."""
        return self.n * sum(self.widths)

    def usable_bits(self) -> int:
        """Capacity minus the Null cells: one Null per column costs one width each."""
        return self.capacity_bits() - sum(self.widths)

    def column_width(self, col: int) -> int:
        if not 1 <= col <= self.n:
            raise IndexOutOfRange(f"column {col} outside 1..{self.n}")
        return self.widths[col - 1]

    def mirror_column(self, col: int) -> int:
        """The equal-width partner column n+1-col (center maps to itself)."""
        if not 1 <= col <= self.n:
            raise IndexOutOfRange(f"column {col} outside 1..{self.n}")
        return self.n + 1 - col


def lookup(grid: CGrid, row: int, col: int) -> Cell:
    return grid.cell(row, col)


def generate_grid(
    n: int,
    widths: tuple[int, ...] | None = None,
    seed: int | bytes = 0,
    created_at: int = 0,
) -> CGrid:
    """Deterministically build a valid grid from (n, widths, seed).

    The Null permutation, cell symbols, and payload bits all come from a
    seeded stream, so both provisioning endpoints reconstruct the same grid.
    """
    check_dimension(n)
    if widths is None:
        widths = default_widths(n)
    widths = tuple(widths)
    check_widths(n, widths)

    stream = ByteStream(seed, b"cgrid")

    # Null position per row: a uniformly drawn permutation of the columns.
    null_col = list(range(n))
    stream.shuffle(null_col)

    rows = []
    for r in range(n):
        row_cells = []
        for c in range(n):
            if null_col[r] == c:
                row_cells.append(Cell(None, None))
            else:
                symbol = chr(ord("A") + stream.randbelow(26))
                payload = stream.take(widths[c] // 8)
                row_cells.append(Cell(symbol, payload))
        rows.append(tuple(row_cells))
    cells = tuple(rows)

    grid_id = _content_id(n, widths, cells)
    return CGrid(n=n, widths=widths, cells=cells, grid_id=grid_id, created_at=created_at)


def validate_grid(grid: CGrid) -> ValidationReport:
    """Structural check; empty report means the grid is valid."""
    v: list[Violation] = []
    n = grid.n

    if n < 5 or n % 2 == 0:
        v.append(Violation("BadDimension", None, None, f"n={n} must be odd and >= 5"))
    if len(grid.widths) != n:
        v.append(
            Violation(
                "WidthCountMismatch", None, None,
                f"{len(grid.widths)} widths for {n} columns",
            )
        )
    for c, w in enumerate(grid.widths, start=1):
        if w <= 0 or w % 8 != 0:
            v.append(
                Violation("WidthNotByteMultiple", None, c, f"column {c} width {w}")
            )
    if tuple(grid.widths) != tuple(reversed(grid.widths)):
        v.append(
            Violation("NonPalindromicWidths", None, None, f"widths {list(grid.widths)}")
        )

    if len(grid.cells) != n or any(len(row) != n for row in grid.cells):
        v.append(Violation("ShapeMismatch", None, None, "cell matrix is not n x n"))
        return ValidationReport(tuple(v))

    # Exactly one Null per row and per column.
    for r in range(1, n + 1):
        count = sum(1 for cell in grid.cells[r - 1] if cell.is_null)
        if count != 1:
            v.append(
                Violation("NullCountRow", r, None, f"row {r} has {count} Null cells")
            )
    for c in range(1, n + 1):
        count = sum(1 for row in grid.cells if row[c - 1].is_null)
        if count != 1:
            v.append(
                Violation(
                    "NullCountColumn", None, c, f"column {c} has {count} Null cells"
                )
            )

    for r in range(1, n + 1):
        for c in range(1, n + 1):
            cell = grid.cells[r - 1][c - 1]
            if cell.is_null:
                if cell.payload is not None:
                    v.append(
                        Violation("NullWithPayload", r, c, f"Null at ({r},{c}) has payload")
                    )
                continue
            if cell.symbol is None or len(cell.symbol) != 1 or not ("A" <= cell.symbol <= "Z"):
                v.append(
                    Violation("BadSymbol", r, c, f"symbol {cell.symbol!r} at ({r},{c})")
                )
            want = grid.widths[c - 1] if c <= len(grid.widths) else None
            if cell.payload is None or (want is not None and cell.width_bits() != want):
                v.append(
                    Violation(
                        "PayloadWidthMismatch", r, c,
                        f"cell ({r},{c}) payload {cell.width_bits()} bits, column wants {want}",
                    )
                )

    # Mirror coverage: at least ceil(n/2) - 1 equal-width column pairs.
    pairs = sum(
        1
        for c in range(1, n // 2 + 1)
        if c <= len(grid.widths)
        and grid.n + 1 - c <= len(grid.widths)
        and grid.widths[c - 1] == grid.widths[grid.n - c]
    )
    need = (n + 1) // 2 - 1
    if pairs < need:
        v.append(
            Violation(
                "MirrorColumnShortfall", None, None,
                f"{pairs} mirror pairs, need at least {need}",
            )
        )

    return ValidationReport(tuple(v))


### serialization

def serialize_grid(grid: CGrid) -> bytes:
    """Canonical text form; stable byte-for-byte for equal grids."""
    return _render(grid.n, grid.widths, grid.cells).encode("ascii")


def deserialize_grid(data: bytes) -> CGrid:
    """Parse and validate a serialized grid.

    Structural damage (bad magic, unparseable fields, broken hex) raises
    MalformedGridFile; a parseable grid that violates invariants raises
    ValidationFailed with the full report.
    """
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as e:
        raise MalformedGridFile(f"not ASCII text: {e}") from None

    lines = text.splitlines()
    if len(lines) < 3 or lines[0] != GRID_MAGIC:
        raise MalformedGridFile("missing CGRID v1 header")
    if not lines[1].startswith("n="):
        raise MalformedGridFile("second line must be n=<dimension>")
    try:
        n = int(lines[1][2:])
    except ValueError:
        raise MalformedGridFile(f"bad dimension line {lines[1]!r}") from None
    if not lines[2].startswith("widths="):
        raise MalformedGridFile("third line must be widths=<comma list>")
    try:
        widths = tuple(int(w) for w in lines[2][len("widths="):].split(","))
    except ValueError:
        raise MalformedGridFile(f"bad widths line {lines[2]!r}") from None

    body = [ln for ln in lines[3:] if ln.strip()]
    if len(body) != n:
        raise MalformedGridFile(f"expected {n} cell rows, got {len(body)}")

    rows = []
    for r, line in enumerate(body, start=1):
        tokens = line.split(" ")
        if len(tokens) != n:
            raise MalformedGridFile(f"row {r} has {len(tokens)} cells, expected {n}")
        row_cells = []
        for c, tok in enumerate(tokens, start=1):
            if tok == "NULL":
                row_cells.append(Cell(None, None))
                continue
            if len(tok) < 3 or tok[1] != ":":
                raise MalformedGridFile(f"bad cell {tok!r} at ({r},{c})")
            symbol, hexpart = tok[0], tok[2:]
            if len(hexpart) % 2 != 0:
                raise MalformedGridFile(f"odd hex length at ({r},{c})")
            try:
                payload = bytes.fromhex(hexpart)
            except ValueError:
                raise MalformedGridFile(f"bad hex at ({r},{c})") from None
            row_cells.append(Cell(symbol, payload))
        rows.append(tuple(row_cells))

    grid = CGrid(
        n=n,
        widths=widths,
        cells=tuple(rows),
        grid_id=_content_id(n, widths, tuple(rows)),
    )
    report = validate_grid(grid)
    if not report.ok:
        raise ValidationFailed(report)
    return grid


def _render(n: int, widths: tuple[int, ...], cells) -> str:
    lines = [GRID_MAGIC, f"n={n}", "widths=" + ",".join(str(w) for w in widths)]
    for row in cells:
        toks = []
        for cell in row:
            if cell.is_null:
                toks.append("NULL")
            else:
                toks.append(f"{cell.symbol}:{cell.payload.hex()}")
        lines.append(" ".join(toks))
    return "\n".join(lines) + "\n"


def _content_id(n: int, widths: tuple[int, ...], cells) -> str:
    digest = hashlib.sha256(_render(n, widths, cells).encode("ascii")).hexdigest()
    return digest[:16]
