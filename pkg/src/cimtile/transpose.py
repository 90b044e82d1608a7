"""In-situ transpose across the two layers: a schedule compiler plus an
executor over the array micro-ops.

The flow is one upper-diagonal transfer up, one paired diagonal-copy
cycle per column (both layers swap in the same cycle since they occupy
disjoint tiers), and one lower-diagonal transfer back down: n + 1 cycles
total for an n x n tile. Diagonal cells are never written. After the
run the lower diagonal of the scratch layer still holds the original
upper-diagonal data; it is reported, not cleared, as free scratch for
chained operations.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .arrays import SwapDirection, TEdramArray, TSramArray, Via3dMap, \
    ScheduleError, inter_layer_transfer
from .config import TileConfig
from .core import MatrixTile
from .metrics import CostLedger

OPS_PER_WORD = 4  # operation-count convention for throughput figures


@dataclass(frozen=True)
class TransferStep:
    direction: str  # "A->B" or "B->A"
    words: int


@dataclass(frozen=True)
class SwapStep:
    k: int  # 1-indexed column/row pair
    words_per_layer: int


@dataclass(frozen=True)
class TransposeSchedule:
    n: int
    steps: tuple

    @property
    def cycle_count(self) -> int:
        return len(self.steps)


@lru_cache(maxsize=None)
def compile_transpose(n: int) -> TransposeSchedule:
    """Build the (n + 1)-cycle schedule for an n x n tile."""
    if n < 2:
        raise ScheduleError("transpose needs n of at least 2")
    pairs = n * (n - 1) // 2
    steps: list = [TransferStep("A->B", pairs)]
    for k in range(1, n):
        steps.append(SwapStep(k=k, words_per_layer=n - k))
    steps.append(TransferStep("B->A", pairs))
    schedule = TransposeSchedule(n=n, steps=tuple(steps))
    assert schedule.cycle_count == n + 1
    return schedule


def execute_transpose(layer_a: TSramArray, layer_b: TEdramArray,
                      schedule: TransposeSchedule,
                      config: TileConfig | None = None):
    """Run a compiled schedule; layer A ends up holding the transpose.

    Returns (layer_a, layer_b, ledger). Contention, reachability, and
    retention violations from the array layer propagate unchanged.
    """
    config = config or TileConfig()
    n = schedule.n
    if layer_a.n != n or layer_b.n != n:
        raise ScheduleError(
            f"schedule is for n={n}, arrays are {layer_a.n} and {layer_b.n}")

    clock = config.clock_period_transpose_s
    energy = config.energy_table["transpose"]
    ledger = CostLedger(op="transpose")
    cycles = 0

    for step in schedule.steps:
        if isinstance(step, TransferStep):
            if step.direction == "A->B":
                via = Via3dMap.upper_diagonal(n)
                moved = inter_layer_transfer(layer_a, layer_b, via)
                ledger.add_events("xfer_ab", moved, energy["xfer_ab"])
                ledger.add_latency("xfer_ab", clock)
            else:
                via = Via3dMap.lower_diagonal(n)
                moved = inter_layer_transfer(layer_b, layer_a, via)
                ledger.add_events("xfer_ba", moved, energy["xfer_ba"])
                ledger.add_latency("xfer_ba", clock)
        else:
            moved_a = layer_a.intra_column_swap_step(
                step.k, SwapDirection.LOWER_TO_UPPER)
            moved_b = layer_b.intra_column_swap_step(
                step.k, SwapDirection.UPPER_TO_LOWER)
            ledger.add_events("swap_a", moved_a, energy["swap_a"])
            ledger.add_events("swap_b", moved_b, energy["swap_b"])
            ledger.add_latency("swap", clock)
        cycles += 1
        layer_b.advance_cycles(1)

    ledger.extras["cycles"] = cycles
    ledger.extras["clock_period_s"] = clock
    ledger.extras["overdriven_write_events"] = (
        layer_a.overdriven_write_events + layer_b.overdriven_write_events)
    return layer_a, layer_b, ledger


def transpose_tile(tile: MatrixTile, config: TileConfig | None = None):
    """Convenience wrapper: build both layers, run, snapshot results.

    Returns (transposed tile, residual scratch-layer tile, ledger).
    """
    config = config or TileConfig()
    layer_a = TSramArray(tile)
    layer_b = TEdramArray(n=tile.n,
                          retention_limit=config.retention_limit_cycles)
    schedule = compile_transpose(tile.n)
    layer_a, layer_b, ledger = execute_transpose(layer_a, layer_b, schedule,
                                                 config)
    return layer_a.tile, layer_b.tile, ledger


def format_schedule(schedule: TransposeSchedule) -> str:
    """One line per cycle, stable enough for golden-file comparison."""
    width = len(str(schedule.cycle_count))
    lines = []
    for cycle, step in enumerate(schedule.steps, start=1):
        tag = f"cycle {cycle:0{width}d}:"
        if isinstance(step, TransferStep):
            kind = "xfer_ab upper" if step.direction == "A->B" else "xfer_ba lower"
            lines.append(f"{tag} {kind} words={step.words}")
        else:
            lines.append(f"{tag} swap k={step.k} "
                         f"words_per_layer={step.words_per_layer}")
    return "\n".join(lines) + "\n"
