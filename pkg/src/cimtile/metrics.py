"""Energy/latency ledger, throughput and efficiency figures, linearity and
ENOB statistics, and the CSV/JSON report schemas.

Report formatting is fixed at four significant figures; the underlying
floats are kept at full precision for tests and downstream tooling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import TileError
from . import kernels
from .analog import ADC_LEVELS, ADC_MAX_COUNT, DAC_FULL_SCALE

GIGA = 1e9


class EmptyLedgerError(TileError):
    """Rollup requested on a ledger with no recorded energy."""


class CostLedger:
    """Per-phase event, energy, and latency accumulators for one run.

    Energy phases and latency phases may differ in granularity (paired
    swap cycles split energy per layer but share their cycles); totals
    are exact sums of the parts and never go negative.
    """

    def __init__(self, op: str):
        self.op = op
        self.events: dict[str, int] = {}
        self.energy_j: dict[str, float] = {}
        self.latency_entries: list[tuple[str, float]] = []
        self.extras: dict = {}

    def add_events(self, phase: str, count: int, energy_per_event_j: float) -> None:
        if count < 0 or energy_per_event_j < 0:
            raise ValueError("ledger entries must be non-negative")
        self.events[phase] = self.events.get(phase, 0) + int(count)
        self.energy_j[phase] = self.energy_j.get(phase, 0.0) \
            + count * energy_per_event_j

    def add_latency(self, phase: str, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("ledger entries must be non-negative")
        self.latency_entries.append((phase, float(seconds)))

    @property
    def total_energy_j(self) -> float:
        return sum(self.energy_j.values())

    @property
    def total_latency_s(self) -> float:
        return sum(seconds for _, seconds in self.latency_entries)

    @property
    def latency_s(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for phase, seconds in self.latency_entries:
            out[phase] = out.get(phase, 0.0) + seconds
        return out


@dataclass(frozen=True)
class ThroughputReport:
    ops_count: int
    latency_s: float
    energy_j: float
    gops: float
    gops_per_w: float

    def formatted(self) -> dict[str, str]:
        return {"gops": f"{self.gops:.4g}", "gops_per_w": f"{self.gops_per_w:.4g}"}


def throughput(ops_count: int, latency_s: float, energy_j: float) -> ThroughputReport:
    """Operations per second and per watt.

    gops = ops / latency / 1e9 and gops_per_w = ops / energy / 1e9
    (ops per joule equals ops per second per watt).
    """
    if latency_s <= 0 or energy_j <= 0:
        raise ValueError("latency and energy must be positive")
    if ops_count <= 0:
        raise ValueError("ops_count must be positive")
    return ThroughputReport(
        ops_count=int(ops_count),
        latency_s=float(latency_s),
        energy_j=float(energy_j),
        gops=ops_count / latency_s / GIGA,
        gops_per_w=ops_count / energy_j / GIGA,
    )


# -- ENOB -----------------------------------------------------------------


@dataclass(frozen=True)
class ConversionPipeline:
    """Calibrated quantizer abstraction the ENOB estimator sweeps.

    Level noise is injected per conversion; a static integer offset plus
    its calibration correction may be present (they cancel when both are
    set, mirroring a calibrated word).
    """

    noise_sigma_level: float = 0.0
    offset_counts: int = 0
    cal_counts: int = 0

    def convert_levels(self, levels: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray:
        levels = np.asarray(levels, dtype=np.float64)
        if self.noise_sigma_level > 0.0:
            levels = levels + rng.normal(0.0, self.noise_sigma_level, levels.shape)
        crossings = levels * float(ADC_MAX_COUNT)
        off = np.full(levels.shape, self.offset_counts, dtype=np.int64)
        cal = np.full(levels.shape, self.cal_counts, dtype=np.int64)
        return kernels.convert_counts(crossings, off, cal)


@dataclass(frozen=True)
class EnobReport:
    rms_error_lsb: float
    enob_bits: float
    trials: int
    noise_sigma_level: float
    method: str = "ramp-histogram"


def estimate_enob(pipeline: ConversionPipeline, trials: int,
                  rng: np.random.Generator) -> EnobReport:
    """Effective resolution from the RMS conversion error.

    Sweeps a dense evenly spaced grid of input levels through the
    pipeline and compares measured counts against the continuous ideal
    crossing; the RMS error in counts maps to bits via the
    quantization-noise formula enob = log2(64 / (rms * sqrt(12))). The
    grid is deterministic so the rng only drives the pipeline's noise,
    and endpoint sampling keeps the noiseless estimate at or below the
    6-bit ceiling of the 64-level quantizer.
    """
    if trials < 100:
        raise ValueError("ENOB estimate needs at least 100 conversions")
    # Half-open grid aligned with the 63 quantizer periods, an even number
    # of sample phases per period (so the +-0.5 LSB tie is sampled); this
    # pins the noiseless RMS at or marginally above the ideal 1/sqrt(12)
    # floor, keeping the estimate within the 6-bit ceiling.
    per_period = -(-int(trials) // ADC_MAX_COUNT)
    per_period += per_period % 2
    total = ADC_MAX_COUNT * per_period
    levels = np.arange(total) / float(total)
    counts = pipeline.convert_levels(levels, rng)
    err = counts - levels * float(ADC_MAX_COUNT)
    rms = float(np.sqrt(np.mean(err * err)))
    enob = math.log2(ADC_LEVELS / (rms * math.sqrt(12.0)))
    return EnobReport(rms_error_lsb=rms, enob_bits=enob, trials=len(levels),
                      noise_sigma_level=pipeline.noise_sigma_level)


# -- signal margins --------------------------------------------------------


def margin_analytics(op: str, pair: tuple, sigma_lsb: float) -> tuple[float, float]:
    """Analytic (mean, sigma) of the signal margin for one adjacent code
    pair: the Gaussian fold of the two independent per-conversion noise
    draws around the ideal level step."""
    sigma_level = sigma_lsb / DAC_FULL_SCALE
    if op == "dac":
        return 1.0 / 15.0, math.sqrt(2.0) * sigma_level
    if op == "add":
        return 1.0 / 30.0, sigma_level / math.sqrt(2.0)
    if op == "mul":
        a, b = pair
        return b / 225.0, math.sqrt(2.0) * sigma_level * (b / 15.0)
    raise ValueError(f"unknown margin op {op!r}")


def signal_margin_samples(op: str, trials: int, sigma_lsb: float,
                          rng: np.random.Generator,
                          fixed_code: int = 15) -> dict:
    """Monte-Carlo margin samples per adjacent code pair.

    dac: output step for code c -> c+1. add: step in one operand of the
    current-domain sum. mul: step in the analog operand at a fixed
    digital multiplier code.
    """
    sigma_level = sigma_lsb / DAC_FULL_SCALE
    out = {}
    for c in range(15):
        n1 = rng.normal(0.0, sigma_level, trials) if sigma_lsb > 0 else np.zeros(trials)
        n2 = rng.normal(0.0, sigma_level, trials) if sigma_lsb > 0 else np.zeros(trials)
        lo = c / 15.0 + n1
        hi = (c + 1) / 15.0 + n2
        if op == "dac":
            samples = hi - lo
            key = (c, c + 1)
        elif op == "add":
            samples = (hi - lo) / 2.0
            key = (c, c + 1)
        elif op == "mul":
            scale = fixed_code / 15.0
            samples = (hi - lo) * scale
            key = (c, fixed_code)
        else:
            raise ValueError(f"unknown margin op {op!r}")
        out[key] = samples
    return out


# -- linearity -------------------------------------------------------------


@dataclass(frozen=True)
class LinearityRow:
    ideal: int
    mean_measured: float
    std_measured: float


def _add_decode(counts: np.ndarray) -> np.ndarray:
    # nearest point on the 0..30 sum grid
    return (60 * counts.astype(np.int64) + 63) // 126


def linearity_sweep(op: str, noise_sigma_lsb: float, trials: int,
                    rng: np.random.Generator) -> list[LinearityRow]:
    """Mean and spread of the measured output at every distinct ideal
    level the operation can produce."""
    if op == "add":
        ideals = list(range(31))
        pairs = [(min(s, 15), s - min(s, 15)) for s in ideals]
    elif op == "mul":
        products = sorted({a * b for a in range(16) for b in range(16)})
        ideals = products
        rep = {}
        for a in range(16):
            for b in range(16):
                rep.setdefault(a * b, (a, b))
        pairs = [rep[p] for p in products]
    else:
        raise ValueError(f"unknown linearity op {op!r}")

    sigma_level = noise_sigma_lsb / DAC_FULL_SCALE
    rows = []
    zeros = np.zeros(trials)
    for ideal, (a, b) in zip(ideals, pairs):
        a_codes = np.full(trials, a, dtype=np.uint8)
        b_codes = np.full(trials, b, dtype=np.uint8)
        na = rng.normal(0.0, sigma_level, trials) if sigma_level > 0 else zeros
        nb = rng.normal(0.0, sigma_level, trials) if sigma_level > 0 else zeros
        counts = kernels.ewise_convert(
            a_codes, b_codes, op == "mul", na, nb,
            np.zeros(trials, dtype=np.int64), np.zeros(trials, dtype=np.int64))
        measured = _add_decode(counts) if op == "add" else counts
        rows.append(LinearityRow(ideal=int(ideal),
                                 mean_measured=float(np.mean(measured)),
                                 std_measured=float(np.std(measured))))
    return rows


# -- energy rollup ----------------------------------------------------------

# Layer attribution per (op, phase); estimated where a phase genuinely
# spans both tiers.
_PHASE_LAYER_WEIGHTS = {
    ("transpose", "xfer_ab"): {"A": 0.5, "B": 0.5},
    ("transpose", "swap_a"): {"A": 1.0},
    ("transpose", "swap_b"): {"B": 1.0},
    ("transpose", "xfer_ba"): {"A": 0.5, "B": 0.5},
    ("mul", "load"): {"A": 2 / 3, "B": 1 / 3},
    ("mul", "dac"): {"A": 1.0},
    ("mul", "transfer"): {"A": 0.5, "B": 0.5},
    ("mul", "analog"): {"B": 1.0},
    ("mul", "seed_write"): {"B": 1.0},
    ("mul", "convert"): {"B": 1.0},
    ("mul", "read"): {"B": 1.0},
    ("add", "load"): {"A": 1.0},
    ("add", "dac"): {"A": 1.0},
    ("add", "transfer"): {"A": 0.5, "B": 0.5},
    ("add", "analog"): {"A": 1.0},
    ("add", "seed_write"): {"B": 1.0},
    ("add", "convert"): {"B": 1.0},
    ("add", "read"): {"B": 1.0},
    ("mac", "load"): {"A": 1.0},
    ("mac", "accumulate"): {"A": 1.0},
    ("mac", "convert"): {"B": 1.0},
    ("mac", "read"): {"B": 1.0},
}


@dataclass(frozen=True)
class EnergyRow:
    phase: str
    layer: str
    joules: float
    fraction: float


def energy_rollup(ledger: CostLedger) -> list[EnergyRow]:
    """Per-phase, per-layer energy table; fractions sum to one."""
    total = ledger.total_energy_j
    if not ledger.energy_j or total <= 0:
        raise EmptyLedgerError("ledger has no recorded energy")
    rows = []
    for phase, joules in ledger.energy_j.items():
        weights = _PHASE_LAYER_WEIGHTS.get((ledger.op, phase), {"A": 1.0})
        for layer, w in weights.items():
            rows.append(EnergyRow(phase=phase, layer=layer,
                                  joules=joules * w,
                                  fraction=joules * w / total))
    return rows


# -- report emission ---------------------------------------------------------


def write_linearity_csv(rows: list[LinearityRow], path) -> None:
    lines = ["ideal,mean,std"]
    lines += [f"{r.ideal},{r.mean_measured:.6g},{r.std_measured:.6g}" for r in rows]
    _write_lines(path, lines)


def write_energy_csv(rows: list[EnergyRow], path) -> None:
    lines = ["phase,layer,joules,fraction"]
    lines += [f"{r.phase},{r.layer},{r.joules:.6g},{r.fraction:.4g}" for r in rows]
    _write_lines(path, lines)


def write_throughput_csv(entries: list[tuple], path) -> None:
    """Entries are (op, n, report)."""
    lines = ["op,n,ops,latency_s,energy_j,gops,gops_per_w"]
    for op, n, rep in entries:
        lines.append(f"{op},{n},{rep.ops_count},{rep.latency_s:.6g},"
                     f"{rep.energy_j:.6g},{rep.gops:.4g},{rep.gops_per_w:.4g}")
    _write_lines(path, lines)


def _write_lines(path, lines) -> None:
    from pathlib import Path
    Path(path).write_text("\n".join(lines) + "\n")


def summary_payload(ledger: CostLedger | None = None,
                    throughput_entries: list | None = None,
                    energy_rows: list | None = None,
                    linearity_rows: list | None = None,
                    **extra) -> dict:
    """JSON run summary mirroring the CSV schemas."""
    payload = dict(extra)
    if ledger is not None:
        payload["ledger"] = {
            "op": ledger.op,
            "events": dict(ledger.events),
            "energy_j": dict(ledger.energy_j),
            "latency_s": dict(ledger.latency_s),
            "total_energy_j": ledger.total_energy_j,
            "total_latency_s": ledger.total_latency_s,
            "extras": {k: v for k, v in ledger.extras.items()
                       if isinstance(v, (int, float, str, bool))},
        }
    if throughput_entries:
        payload["throughput"] = [
            {"op": op, "n": n, "ops": rep.ops_count,
             "latency_s": rep.latency_s, "energy_j": rep.energy_j,
             "gops": rep.gops, "gops_per_w": rep.gops_per_w}
            for op, n, rep in throughput_entries]
    if energy_rows:
        payload["energy_breakdown"] = [
            {"phase": r.phase, "layer": r.layer, "joules": r.joules,
             "fraction": r.fraction} for r in energy_rows]
    if linearity_rows:
        payload["linearity"] = [
            {"ideal": r.ideal, "mean": r.mean_measured, "std": r.std_measured}
            for r in linearity_rows]
    return payload


def write_summary_json(payload: dict, path) -> None:
    from pathlib import Path
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
