"""Element-wise multiply/add orchestration and the current-domain MAC mode.

An element-wise job runs as a strict seven-phase barrier pipeline (load,
DAC, transfer, analog op, counter seed write, conversion, read); all
words convert in parallel inside a phase, so phase latency is independent
of the tile size while energy scales with the per-phase event counts.
Conversion always occupies the full 64 ADC cycles regardless of early
comparator firing, matching the latency accounting.

Results live in the scratch layer's 8-bit words as counter codes; the
decoded 6-bit counts (and, for addition, the exact sums they encode) are
carried alongside.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .core import MatrixTile, MatrixShapeError, TileError
from .config import ADC_CYCLES, EWISE_PHASES, MAC_PHASES, TileConfig, \
    ewise_phase_events
from .analog import ADC_MAX_COUNT, DAC_FULL_SCALE
from .lfsr import LfsrLut, build_lut, decode_add_count
from .metrics import CostLedger
from . import kernels

OPS_PER_WORD = 8  # operation-count convention for throughput figures


class UncalibratedError(TileError):
    """An element-wise job was started on a bank that was never
    offset-calibrated."""


class ActivationError(TileError):
    """A MAC activation value is not a binary enable."""


class JobError(TileError):
    """A job description file is malformed."""


class EwiseOp(enum.Enum):
    MUL = "mul"
    ADD = "add"

    @property
    def is_mul(self) -> bool:
        return self is EwiseOp.MUL


@dataclass(frozen=True)
class EwiseJob:
    """Operand pair for one element-wise run.

    Operands a and b sit side by side in the compute layer; for multiply,
    b is additionally mirrored into the low nibble of the scratch layer's
    8-bit words, which ``layer_b_initial_words`` reflects.
    """

    op: EwiseOp
    a: MatrixTile
    b: MatrixTile
    layer_b_initial_words: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.a.n != self.b.n:
            raise MatrixShapeError(
                f"operand shapes differ: {self.a.n} vs {self.b.n}")
        if self.op.is_mul:
            words = self.b.elems.astype(np.uint8)  # low nibble holds b
        else:
            words = np.zeros((self.a.n, self.a.n), dtype=np.uint8)
        words.setflags(write=False)
        object.__setattr__(self, "layer_b_initial_words", words)

    @property
    def n(self) -> int:
        return self.a.n


class WordBank:
    """Comparator population for an n x n job.

    Each word owns an independent comparator; offsets are drawn once per
    trial and stay static. Calibration measures a shared known input
    through every word and records the per-word count corrections.
    """

    def __init__(self, n: int, op: EwiseOp, lut: LfsrLut,
                 offset_lsb: np.ndarray):
        self.n = n
        self.op = op
        self.lut = lut
        self.offset_lsb = np.asarray(offset_lsb, dtype=np.float64).reshape(n * n)
        self.offset_counts = np.floor(self.offset_lsb + 0.5).astype(np.int64)
        self.cal_counts: np.ndarray | None = None
        self.cal_reliable: np.ndarray | None = None

    @classmethod
    def draw(cls, n: int, op: EwiseOp, config: TileConfig,
             rng: np.random.Generator, lut: LfsrLut | None = None) -> "WordBank":
        sigma = config.variation.comparator_offset_sigma_lsb
        if sigma > 0:
            offsets = rng.normal(0.0, sigma, n * n)
        else:
            offsets = np.zeros(n * n)
        return cls(n, op, lut or build_lut(config.lfsr_taps), offsets)

    @property
    def calibrated(self) -> bool:
        return self.cal_counts is not None

    def calibrate(self, level: float) -> np.ndarray:
        """One-point calibration of every word at a shared known level.

        Returns the per-word offset corrections; words whose measurement
        pinned at a rail are flagged unreliable in ``cal_reliable``.
        """
        expected = int(np.floor(level * ADC_MAX_COUNT + 0.5))
        raw = expected + self.offset_counts
        measured = np.clip(raw, 0, ADC_MAX_COUNT)
        self.cal_counts = measured - expected
        self.cal_reliable = (measured > 0) & (measured < ADC_MAX_COUNT)
        return self.cal_counts


def run_ewise(job: EwiseJob, config: TileConfig, rng: np.random.Generator,
              bank: WordBank | None = None,
              require_calibration: bool = True):
    """Execute one element-wise job.

    When no bank is supplied, one is drawn from the variation config and
    calibrated at the configured known level. Supplying an uncalibrated
    bank is a hard error unless ``require_calibration`` is cleared.
    Returns (EwiseResult, CostLedger).
    """
    n = job.n
    words = n * n
    if bank is None:
        bank = WordBank.draw(n, job.op, config, rng)
        bank.calibrate(config.calibration_level)
    if bank.n != n:
        raise MatrixShapeError(f"bank is sized {bank.n}, job is {n}")
    if not bank.calibrated:
        if require_calibration:
            raise UncalibratedError(
                "offset calibration must run before computation")
        cal = np.zeros(words, dtype=np.int64)
    else:
        cal = bank.cal_counts

    sigma_level = config.variation.dac_sigma_lsb / DAC_FULL_SCALE
    zeros = np.zeros(words)
    noise_a = rng.normal(0.0, sigma_level, words) if sigma_level > 0 else zeros
    if job.op.is_mul or sigma_level == 0:
        noise_b = zeros
    else:
        noise_b = rng.normal(0.0, sigma_level, words)

    a_flat = job.a.elems.reshape(words)
    b_flat = job.b.elems.reshape(words)
    counts = kernels.ewise_convert(a_flat, b_flat, job.op.is_mul,
                                   noise_a, noise_b,
                                   bank.offset_counts, cal)
    code_table = np.array(bank.lut.count_to_code, dtype=np.uint8)
    codes = code_table[counts]
    values = decode_add_count(counts) if job.op is EwiseOp.ADD \
        else counts.copy()

    ledger = _ewise_ledger(job.op, n, config)
    result = EwiseResult(op=job.op,
                         counts=counts.reshape(n, n),
                         codes=codes.reshape(n, n),
                         values=values.reshape(n, n))
    return result, ledger


@dataclass(frozen=True)
class EwiseResult:
    """Counts are the 6-bit conversion results; codes are their 8-bit
    counter encodings as stored. For addition, ``values`` decodes the
    counts back to exact sums on the 0..30 grid; for multiply the count
    itself is the reported product code."""

    op: EwiseOp
    counts: np.ndarray
    codes: np.ndarray
    values: np.ndarray


def _ewise_ledger(op: EwiseOp, n: int, config: TileConfig) -> CostLedger:
    key = op.value
    energies = config.energy_table[key]
    events = ewise_phase_events(key, n)
    cycle = config.adc_cycle_mul_s if op.is_mul else config.adc_cycle_add_s
    overhead = config.phase_overhead_mul_s if op.is_mul \
        else config.phase_overhead_add_s
    ledger = CostLedger(op=key)
    for phase in EWISE_PHASES:
        ledger.add_events(phase, events[phase], energies[phase])
        if phase == "convert":
            ledger.add_latency(phase, ADC_CYCLES * cycle)
        else:
            ledger.add_latency(phase, overhead / 6.0)
    ledger.extras["adc_cycles"] = ADC_CYCLES
    ledger.extras["adc_cycle_s"] = cycle
    return ledger


# -- MAC ---------------------------------------------------------------------


@dataclass(frozen=True)
class MacJob:
    """Weight matrix plus one binary input-activation enable per row."""

    weights: MatrixTile
    activations: np.ndarray

    def __post_init__(self):
        acts = np.asarray(self.activations)
        if acts.shape != (self.weights.n,):
            raise MatrixShapeError(
                f"need {self.weights.n} activations, got shape {acts.shape}")
        if not np.isin(acts, (0, 1)).all():
            raise ActivationError("activations must all be 0 or 1")
        acts = acts.astype(np.int64)
        acts.setflags(write=False)
        object.__setattr__(self, "activations", acts)

    @property
    def n(self) -> int:
        return self.weights.n


@dataclass(frozen=True)
class MacResult:
    column_sums: np.ndarray   # exact integer accumulation, pre-quantization
    counts: np.ndarray | None  # 6-bit codes when quantized
    full_scale: int


def run_mac(job: MacJob, config: TileConfig, rng: np.random.Generator,
            quantize: bool = True):
    """Accumulate enabled rows down every column in the current domain.

    The quantizer full scale is 15 times the number of active rows, so
    no column can saturate. Returns (MacResult, CostLedger).
    """
    del rng  # accumulation is noiseless in this model
    sums = job.activations @ job.weights.elems.astype(np.int64)
    active = int(job.activations.sum())
    full_scale = DAC_FULL_SCALE * active
    counts = None
    if quantize:
        if active == 0:
            counts = np.zeros(job.n, dtype=np.int64)
        else:
            levels = sums / float(full_scale)
            counts = kernels.quantize_counts(levels * float(ADC_MAX_COUNT))

    energies = config.energy_table["mac"]
    overhead = config.phase_overhead_add_s
    events = {"load": job.n * job.n, "accumulate": active * job.n,
              "convert": ADC_CYCLES * job.n, "read": job.n}
    ledger = CostLedger(op="mac")
    for phase in MAC_PHASES:
        ledger.add_events(phase, events[phase], energies[phase])
        if phase == "convert":
            ledger.add_latency(phase, ADC_CYCLES * config.adc_cycle_add_s)
        else:
            ledger.add_latency(phase, overhead / 6.0)
    ledger.extras["active_rows"] = active
    ledger.extras["full_scale"] = full_scale
    return MacResult(column_sums=sums, counts=counts,
                     full_scale=full_scale), ledger


# -- job files ---------------------------------------------------------------


@dataclass(frozen=True)
class JobSpec:
    """Parsed job description: op kind, operand paths, output, trials."""

    op: EwiseOp
    a_path: str
    b_path: str
    out: str | None = None
    trials: int = 1


_JOB_KEYS = {"op", "a", "b", "out", "trials"}


def load_job(path) -> JobSpec:
    p = Path(path)
    try:
        doc = yaml.safe_load(p.read_text())
    except OSError as exc:
        raise JobError(f"{p}: cannot read job file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise JobError(f"{p}: invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise JobError(f"{p}: job document must be a mapping")
    unknown = set(doc) - _JOB_KEYS
    if unknown:
        raise JobError(f"{p}: unknown job keys: {sorted(unknown)}")
    try:
        op = EwiseOp(doc["op"])
        spec = JobSpec(op=op, a_path=str(doc["a"]), b_path=str(doc["b"]),
                       out=str(doc["out"]) if "out" in doc else None,
                       trials=int(doc.get("trials", 1)))
    except (KeyError, ValueError) as exc:
        raise JobError(f"{p}: malformed job document: {exc}") from exc
    if spec.trials < 1:
        raise JobError(f"{p}: trials must be at least 1")
    return spec
