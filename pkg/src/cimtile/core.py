"""Shared domain types for the stacked-array in-memory compute simulator.

Digital storage is 4-bit (values 0..15). Analog quantities are carried as
dimensionless fractions of full scale in [0, 1], so level ordering and
margins in LSB stay independent of any particular supply rail choice.
All types here are immutable value objects; mutable array state lives in
the arrays module.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NIBBLE_MAX = 15


class TileError(Exception):
    """Base class for all simulator-raised errors."""


class MatrixParseError(TileError):
    """A matrix file row is malformed or a token is not an integer."""


class MatrixRangeError(TileError):
    """A matrix element falls outside the 4-bit range 0..15."""


class MatrixShapeError(TileError):
    """A matrix is not square or does not match the expected dimension."""


class ConfigError(TileError):
    """A configuration document is malformed or violates an invariant."""


class Layer(enum.Enum):
    A_SRAM = "A_SRAM"
    B_EDRAM = "B_EDRAM"


class SampleSource(enum.Enum):
    DAC = "DAC"
    MUL = "MUL"
    ADD = "ADD"


def check_nibble(value: int) -> int:
    """Validate a single 4-bit word value."""
    v = int(value)
    if not 0 <= v <= NIBBLE_MAX:
        raise MatrixRangeError(f"value {value} outside 0..{NIBBLE_MAX}")
    return v


def _frozen_grid(elems) -> np.ndarray:
    arr = np.asarray(elems)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise MatrixShapeError(f"expected a square grid, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise MatrixShapeError("tile dimension must be at least 2")
    if not np.issubdtype(arr.dtype, np.integer):
        raise MatrixParseError("matrix elements must be integers")
    if arr.size and (arr.min() < 0 or arr.max() > NIBBLE_MAX):
        raise MatrixRangeError(f"matrix elements must be in 0..{NIBBLE_MAX}")
    out = arr.astype(np.uint8)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MatrixTile:
    """Square grid of 4-bit words resident in one layer's subarray.

    ``occupied`` marks which cells hold meaningful data; a fresh scratch
    tile starts fully unoccupied.
    """

    elems: np.ndarray
    layer: Layer = Layer.A_SRAM
    occupied: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        grid = _frozen_grid(self.elems)
        object.__setattr__(self, "elems", grid)
        occ = self.occupied
        if occ is None:
            occ = np.ones(grid.shape, dtype=bool)
        else:
            occ = np.asarray(occ, dtype=bool)
            if occ.shape != grid.shape:
                raise MatrixShapeError("occupancy mask shape mismatch")
            occ = occ.copy()
        occ.setflags(write=False)
        object.__setattr__(self, "occupied", occ)

    @property
    def n(self) -> int:
        return self.elems.shape[0]

    @classmethod
    def zeros(cls, n: int, layer: Layer = Layer.B_EDRAM) -> "MatrixTile":
        """Empty scratch tile, all cells unoccupied."""
        return cls(np.zeros((n, n), dtype=np.uint8), layer,
                   np.zeros((n, n), dtype=bool))

    def to_array(self) -> np.ndarray:
        """Mutable copy of the stored values."""
        return self.elems.astype(np.uint8)


@dataclass(frozen=True)
class AnalogSample:
    """Normalized analog level with a record of the noise already applied.

    ``noise_sigma`` is the standard deviation that was injected when the
    sample was produced (0.0 means noiseless); noise is applied at most
    once per sample, so downstream stages must never re-noise.
    """

    level: float
    source: SampleSource
    noise_sigma: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.level <= 1.0:
            raise ValueError(f"analog level {self.level} outside [0, 1]")
        if self.noise_sigma < 0.0:
            raise ValueError("noise sigma must be non-negative")


def seeded_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Deterministic random stream.

    Identical (seed, stream_id) pairs reproduce the same draws; distinct
    stream ids give statistically independent streams, one per
    Monte-Carlo trial so trials can run concurrently and merge in
    stream-id order.
    """
    if int(seed) < 0 or int(stream_id) < 0:
        raise ValueError("seed and stream_id must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


def load_matrix(path, expected_n: int | None = None,
                layer: Layer = Layer.A_SRAM) -> MatrixTile:
    """Parse a whitespace-separated decimal matrix file, one row per line.

    Blank lines are ignored. Every element must be in 0..15 and the grid
    must be square (and equal to ``expected_n`` when given).
    """
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise MatrixParseError(f"{p}: cannot read matrix file: {exc}") from exc

    rows: list[list[int]] = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            row = [int(tok) for tok in tokens]
        except ValueError as exc:
            raise MatrixParseError(f"{p}:{lineno}: malformed row: {exc}") from exc
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise MatrixParseError(
                f"{p}:{lineno}: row has {len(row)} values, expected {width}")
        rows.append(row)

    if not rows:
        raise MatrixParseError(f"{p}: empty matrix file")
    for lineno, row in enumerate(rows, start=1):
        for v in row:
            if not 0 <= v <= NIBBLE_MAX:
                raise MatrixRangeError(
                    f"{p}: element {v} in row {lineno} outside 0..{NIBBLE_MAX}")
    arr = np.array(rows, dtype=np.int64)
    if arr.shape[0] != arr.shape[1]:
        raise MatrixShapeError(
            f"{p}: matrix is {arr.shape[0]}x{arr.shape[1]}, expected square")
    if expected_n is not None and arr.shape[0] != expected_n:
        raise MatrixShapeError(
            f"{p}: matrix is {arr.shape[0]}x{arr.shape[0]}, expected {expected_n}")
    return MatrixTile(arr, layer)


def save_matrix(tile_or_array, path) -> None:
    """Write a matrix in the same text format ``load_matrix`` reads."""
    arr = tile_or_array.elems if isinstance(tile_or_array, MatrixTile) \
        else np.asarray(tile_or_array)
    lines = [" ".join(str(int(v)) for v in row) for row in arr]
    Path(path).write_text("\n".join(lines) + "\n")
