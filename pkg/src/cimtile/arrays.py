"""Bit-cell-semantics models of the four array types.

Each cell in a subarray owns a read port (R) and a write port (W) on its
row's horizontal line pair. Two switch groups reconfigure connectivity:

* blocker1 joins horizontally adjacent port segments within a row, on
  both the R and the W line;
* blocker2 is the diagonal exchange fabric: it ties each cell's R port
  to the W port of its mirror cell across the main diagonal.

A value driven at a port propagates through the port's whole conducting
group. A schedule is legal only when every conducting group has at most
one driver; a write lands only on write-enabled cells whose W port group
is driven. Undriven enabled cells simply retain their stored value.
This is segment connectivity, not electrical simulation: the grouping is
the minimal one consistent with the worked single-column copy traces,
and any schedule that would be ambiguous under it is rejected by the
driver checks below.

Wordline orientation differs per layer: the SRAM layer reads columns and
writes rows, the eDRAM layer reads rows and writes columns. That is what
restricts each layer's in-place diagonal copy to one direction.
"""

from __future__ import annotations

import enum

import numpy as np

from .core import Layer, MatrixTile, TileError, check_nibble

Coord = tuple[int, int]

DEFAULT_RETENTION_LIMIT = 10_000


class ScheduleError(TileError):
    """An illegal micro-op schedule was requested."""


class BusContentionError(ScheduleError):
    """Two drivers share one conducting segment."""


class UnreachableTargetError(ScheduleError):
    """A write target has no conducting path from its driver."""


class OverlappingAssignmentError(ScheduleError):
    """A driven value would reach more than one write-enabled cell."""


class RetentionError(ScheduleError):
    """A dynamic word exceeded its retention limit before refresh."""


class SwapDirection(enum.Enum):
    LOWER_TO_UPPER = "lower_to_upper"
    UPPER_TO_LOWER = "upper_to_lower"


class Via3dMap:
    """Per-bit-cell vertical connections between the two layers.

    Pairs are (layer A coordinate, layer B coordinate); the map must be
    injective in both directions and inside both arrays' bounds.
    """

    def __init__(self, pairs):
        pairs = tuple((tuple(a), tuple(b)) for a, b in pairs)
        a_side = [a for a, _ in pairs]
        b_side = [b for _, b in pairs]
        if len(set(a_side)) != len(a_side) or len(set(b_side)) != len(b_side):
            raise ScheduleError("via map must be injective in both directions")
        self.pairs = pairs

    def __len__(self):
        return len(self.pairs)

    def check_bounds(self, n: int) -> None:
        for a, b in self.pairs:
            for (r, c) in (a, b):
                if not (0 <= r < n and 0 <= c < n):
                    raise ScheduleError(f"via pair touches ({r},{c}) outside "
                                        f"a {n}x{n} array")

    @classmethod
    def upper_diagonal(cls, n: int) -> "Via3dMap":
        """Straight-through vias for every strictly upper-diagonal cell."""
        return cls((((i, j), (i, j)) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def lower_diagonal(cls, n: int) -> "Via3dMap":
        return cls((((i, j), (i, j)) for i in range(n) for j in range(i)))


class _DisjointSet:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


# Legality of a swap step depends only on geometry and blocker state,
# never on stored data, so verdicts are memoized process-wide.
_SWAP_CHECK_CACHE: set = set()


class _ComputeArray:
    """Common storage, wordline, blocker, and port-group machinery."""

    layer: Layer = Layer.A_SRAM

    def __init__(self, tile: MatrixTile | None = None, n: int | None = None):
        if tile is None:
            if n is None:
                raise ValueError("need a tile or a dimension")
            tile = MatrixTile.zeros(n, self.layer)
        self.n = tile.n
        self.grid = tile.to_array()
        self.occupied = tile.occupied.copy()
        self.write_counts = np.zeros((self.n, self.n), dtype=np.int64)
        self.overdriven_write_events = 0
        self.rwl = np.zeros(self.n, dtype=bool)
        self.wwl = np.zeros(self.n, dtype=bool)
        self.blocker1 = False
        self.blocker2 = False

    # Orientation hooks: which wordline index reads/writes a cell.
    def _read_line(self, coord: Coord) -> int:
        raise NotImplementedError

    def _write_line(self, coord: Coord) -> int:
        raise NotImplementedError

    @property
    def tile(self) -> MatrixTile:
        """Immutable snapshot of the current contents."""
        return MatrixTile(self.grid.copy(), self.layer, self.occupied.copy())

    def set_blockers(self, blocker1: bool, blocker2: bool) -> None:
        self.blocker1 = bool(blocker1)
        self.blocker2 = bool(blocker2)

    def _check_coord(self, coord: Coord) -> Coord:
        r, c = coord
        if not (0 <= r < self.n and 0 <= c < self.n):
            raise ScheduleError(f"cell ({r},{c}) outside {self.n}x{self.n} array")
        return (int(r), int(c))

    # -- port groups ----------------------------------------------------
    # Port ids: R(r,c) = r*n + c, W(r,c) = n*n + r*n + c.

    def _r_port(self, r: int, c: int) -> int:
        return r * self.n + c

    def _w_port(self, r: int, c: int) -> int:
        return self.n * self.n + r * self.n + c

    def _group_of(self, port: int, dsu: _DisjointSet | None) -> int:
        """Group label of a port under the current blocker state."""
        n = self.n
        if dsu is not None:
            return dsu.find(port)
        if not self.blocker1 and not self.blocker2:
            return port
        if self.blocker2 and not self.blocker1:
            # groups are exactly the mirror pairs {R(i,j), W(j,i)};
            # label each by its R member.
            if port < n * n:
                return port
            idx = port - n * n
            r, c = divmod(idx, n)
            return self._r_port(c, r)
        # blocker1 only: one group per row per line type.
        if port < n * n:
            return port // n
        return n * n + (port - n * n) // n

    def _dsu_if_needed(self) -> _DisjointSet | None:
        """Full union-find, required only when both switch groups conduct."""
        if not (self.blocker1 and self.blocker2):
            return None
        n = self.n
        dsu = _DisjointSet(2 * n * n)
        for r in range(n):
            for c in range(n - 1):
                dsu.union(self._r_port(r, c), self._r_port(r, c + 1))
                dsu.union(self._w_port(r, c), self._w_port(r, c + 1))
        for r in range(n):
            for c in range(n):
                dsu.union(self._r_port(r, c), self._w_port(c, r))
        return dsu

    # -- micro-ops ------------------------------------------------------

    def parallel_read(self, cells) -> dict[Coord, int]:
        """Read a set of cells in one cycle; state is never mutated.

        Raises BusContentionError if two requested cells drive one
        conducting segment under the current blocker state.
        """
        cells = [self._check_coord(c) for c in cells]
        dsu = self._dsu_if_needed()
        seen: dict[int, Coord] = {}
        for cell in cells:
            group = self._group_of(self._r_port(*cell), dsu)
            if group in seen:
                raise BusContentionError(
                    f"cells {seen[group]} and {cell} share a conducting read "
                    "segment; illegal schedule")
            seen[group] = cell
        self.rwl[:] = False
        for cell in cells:
            self.rwl[self._read_line(cell)] = True
        return {cell: int(self.grid[cell]) for cell in cells}

    def parallel_write(self, assignments: dict, through_fabric: bool = False,
                       overdriven: bool = False) -> None:
        """Write a set of cells in one cycle; untargeted cells retain
        their values bit-identically.

        Asserts the write wordlines of exactly the target lines. With
        ``through_fabric`` the value must arrive over the diagonal
        exchange fabric, so the target's W port group has to include its
        mirror R port; otherwise the target is unreachable.
        """
        targets = {self._check_coord(k): check_nibble(v)
                   for k, v in assignments.items()}
        if not targets:
            return
        dsu = self._dsu_if_needed()

        driven: dict[int, Coord] = {}
        for cell in targets:
            group = self._group_of(self._w_port(*cell), dsu)
            if group in driven:
                raise OverlappingAssignmentError(
                    f"targets {driven[group]} and {cell} share one conducting "
                    "write segment")
            driven[group] = cell
            if through_fabric:
                mirror = (cell[1], cell[0])
                mirror_group = self._group_of(self._r_port(*mirror), dsu)
                if mirror_group != group:
                    raise UnreachableTargetError(
                        f"cell {cell} is behind an off blocker path; the "
                        "exchange fabric does not reach it")

        self.wwl[:] = False
        lines = {self._write_line(cell) for cell in targets}
        for line in lines:
            self.wwl[line] = True

        # Non-disturb: a driven segment must not touch any other
        # write-enabled cell. With all blockers off every port is its own
        # segment and the scan is vacuous.
        if self.blocker1 or self.blocker2:
            for r in range(self.n):
                for c in range(self.n):
                    cell = (r, c)
                    if cell in targets:
                        continue
                    if not self.wwl[self._write_line(cell)]:
                        continue
                    group = self._group_of(self._w_port(r, c), dsu)
                    if group in driven:
                        raise OverlappingAssignmentError(
                            f"write to {driven[group]} would also disturb "
                            f"write-enabled cell {cell}")

        for cell, value in targets.items():
            self.grid[cell] = value
            self.occupied[cell] = True
            self.write_counts[cell] += 1
            self._note_write(cell)
        if overdriven:
            self.overdriven_write_events += len(targets)

    def _note_write(self, cell: Coord) -> None:
        pass

    def intra_column_swap_step(self, k: int, direction: SwapDirection) -> int:
        """One diagonal exchange cycle.

        With 1-indexed step k, copies all strictly-lower cells of column
        k-1 into row k-1 (lower_to_upper) or the reverse (upper_to_lower),
        0-indexed: (i, k-1) -> (k-1, i) for every i > k-1, sources and
        diagonal untouched. Returns the number of cells written.
        """
        if not 1 <= k <= self.n - 1:
            raise ScheduleError(f"swap step k={k} outside 1..{self.n - 1}")
        self._check_swap_direction(direction)
        j = k - 1
        if direction is SwapDirection.LOWER_TO_UPPER:
            sources = [(i, j) for i in range(j + 1, self.n)]
            dests = [(j, i) for i in range(j + 1, self.n)]
        else:
            sources = [(j, i) for i in range(j + 1, self.n)]
            dests = [(i, j) for i in range(j + 1, self.n)]

        self.set_blockers(blocker1=False, blocker2=True)
        cache_key = (type(self).__name__, self.n, j, direction)
        if cache_key in _SWAP_CHECK_CACHE:
            values = {cell: int(self.grid[cell]) for cell in sources}
            self.rwl[:] = False
            self.rwl[self._read_line(sources[0])] = True
            assignments = dict(zip(dests, (values[s] for s in sources)))
            self.wwl[:] = False
            self.wwl[self._write_line(dests[0])] = True
            for cell, value in assignments.items():
                self.grid[cell] = value
                self.occupied[cell] = True
                self.write_counts[cell] += 1
                self._note_write(cell)
            self.overdriven_write_events += len(assignments)
        else:
            values = self.parallel_read(sources)
            assignments = {d: values[s] for s, d in zip(sources, dests)}
            self.parallel_write(assignments, through_fabric=True,
                                overdriven=True)
            _SWAP_CHECK_CACHE.add(cache_key)
        return len(dests)

    def _check_swap_direction(self, direction: SwapDirection) -> None:
        raise NotImplementedError


class TSramArray(_ComputeArray):
    """SRAM layer: read wordlines run per column, write wordlines per
    row, so the exchange fabric can copy a column into a row."""

    layer = Layer.A_SRAM

    def _read_line(self, coord: Coord) -> int:
        return coord[1]

    def _write_line(self, coord: Coord) -> int:
        return coord[0]

    def _check_swap_direction(self, direction: SwapDirection) -> None:
        if direction is not SwapDirection.LOWER_TO_UPPER:
            raise ScheduleError(
                "SRAM layer wordline orientation only supports "
                "lower-to-upper diagonal copies")


class TEdramArray(_ComputeArray):
    """eDRAM layer: wordline orientation is transposed relative to the
    SRAM layer (reads per row, writes per column), and every stored word
    carries a retention counter reset by each write or refresh."""

    layer = Layer.B_EDRAM

    def __init__(self, tile: MatrixTile | None = None, n: int | None = None,
                 retention_limit: int = DEFAULT_RETENTION_LIMIT):
        super().__init__(tile, n)
        if retention_limit <= 0:
            raise ValueError("retention limit must be positive")
        self.retention_limit = int(retention_limit)
        self.retention_counter = np.zeros((self.n, self.n), dtype=np.int64)

    def _read_line(self, coord: Coord) -> int:
        return coord[0]

    def _write_line(self, coord: Coord) -> int:
        return coord[1]

    def _check_swap_direction(self, direction: SwapDirection) -> None:
        if direction is not SwapDirection.UPPER_TO_LOWER:
            raise ScheduleError(
                "eDRAM layer wordline orientation only supports "
                "upper-to-lower diagonal copies")

    def _note_write(self, cell: Coord) -> None:
        self.retention_counter[cell] = 0

    def advance_cycles(self, cycles: int = 1) -> None:
        """Age every occupied word; raises once any word would outlive
        its charge before the next refresh."""
        self.retention_counter[self.occupied] += int(cycles)
        if self.occupied.any():
            worst = int(self.retention_counter[self.occupied].max())
            if worst > self.retention_limit:
                cell = np.unravel_index(
                    int(np.argmax(np.where(self.occupied,
                                           self.retention_counter, -1))),
                    self.retention_counter.shape)
                raise RetentionError(
                    f"word {tuple(int(x) for x in cell)} reached "
                    f"{worst} cycles without refresh "
                    f"(limit {self.retention_limit}); schedule would lose data")

    def refresh(self) -> None:
        """Rewrite all stored charge: counters reset, data unchanged."""
        self.retention_counter[:] = 0


def refresh(array: TEdramArray) -> None:
    array.refresh()


def inter_layer_transfer(src: _ComputeArray, dst: _ComputeArray,
                         via: Via3dMap) -> int:
    """Copy every via-paired word from src to dst in one cycle.

    Both arrays run with all blockers off so each port is an isolated
    segment feeding exactly its own vertical bond. Sources are left
    unchanged. Returns the number of words moved (an empty map is a
    no-op but still occupies its scheduled cycle).
    """
    if src.layer is dst.layer:
        raise ScheduleError("transfer requires arrays on distinct layers")
    via.check_bounds(src.n)
    via.check_bounds(dst.n)
    if not via.pairs:
        return 0
    src.set_blockers(blocker1=False, blocker2=False)
    dst.set_blockers(blocker1=False, blocker2=False)
    if src.layer is Layer.A_SRAM:
        src_cells = [a for a, _ in via.pairs]
        dst_cells = [b for _, b in via.pairs]
    else:
        src_cells = [b for _, b in via.pairs]
        dst_cells = [a for a, _ in via.pairs]
    values = src.parallel_read(src_cells)
    assignments = {d: values[s] for s, d in zip(src_cells, dst_cells)}
    dst.parallel_write(assignments, overdriven=dst.layer is Layer.A_SRAM)
    return len(via.pairs)
