"""8-bit in-memory LFSR counter: state sequencing, the state-to-count
lookup table, pulse counting, and one-point comparator-offset calibration.

State convention: bits are named Q8..Q1. One step shifts every bit one
position toward Q1 (Qk takes the old Qk+1) and inserts the feedback bit,
the XOR of the configured tap positions of the pre-shift state, at Q8.
The counter is seeded at 00000001 (only Q1 set) before each conversion.

Tap usability is decided by enumeration, never assumed: a tap set is
usable only if at least 64 distinct states are reachable from the seed.
Under this shift direction the q7xq1 preset (feedback Q7 xor Q1) reaches
only 30 states and is rejected; the default taps (5, 4, 3, 1) walk the
full 255-state sequence. See the README for the enumeration results in
both shift directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import AnalogSample, TileError
from .analog import ADC_MAX_COUNT, ComparatorModel, crossing_position, \
    raw_crossing_count

SEED_STATE = 0x01
STATE_BITS = 8
COUNT_LEVELS = 64

TAPS_Q7_XOR_Q1 = (7, 1)     # selectable preset; fails the 64-state check
DEFAULT_TAPS = (5, 4, 3, 1)  # maximal length (255 states) for this shift


class LfsrLockupError(TileError):
    """The all-zero state was reached or supplied; the shifter cannot
    leave it."""


class ShortCycleError(TileError):
    """The configured taps do not reach 64 distinct states from the seed."""


def _check_taps(taps) -> tuple:
    taps = tuple(int(t) for t in taps)
    if not taps or len(set(taps)) != len(taps) \
            or any(not 1 <= t <= STATE_BITS for t in taps):
        raise ValueError(f"taps must be distinct positions in 1..8, got {taps}")
    return taps


@dataclass(frozen=True)
class LfsrState:
    """Shift-register state; bit k-1 of ``q`` holds Qk."""

    q: int
    taps: tuple = DEFAULT_TAPS

    def __post_init__(self):
        object.__setattr__(self, "taps", _check_taps(self.taps))
        if not 0 <= self.q <= 0xFF:
            raise ValueError(f"state {self.q:#x} is not an 8-bit value")

    @property
    def bits(self) -> tuple:
        """Bits in display order Q8..Q1."""
        return tuple((self.q >> k) & 1 for k in range(STATE_BITS - 1, -1, -1))

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


def lfsr_step(state: LfsrState) -> LfsrState:
    """Advance one clock: shift toward Q1, feedback into Q8."""
    if state.q == 0:
        raise LfsrLockupError("all-zero LFSR state cannot advance")
    fb = 0
    for t in state.taps:
        fb ^= (state.q >> (t - 1)) & 1
    return LfsrState(q=(state.q >> 1) | (fb << (STATE_BITS - 1)), taps=state.taps)


def enumerate_states(taps, seed: int = SEED_STATE, limit: int = 256) -> list[int]:
    """Distinct states visited from the seed before the walk first repeats
    (or locks up), capped at ``limit``. This is the startup oracle that
    decides tap usability."""
    taps = _check_taps(taps)
    seen: list[int] = []
    index: dict[int, int] = {}
    state = LfsrState(q=seed, taps=taps)
    while state.q not in index and len(seen) < limit:
        index[state.q] = len(seen)
        seen.append(state.q)
        if state.q == 0:
            break
        state = lfsr_step(state)
    return seen


@dataclass(frozen=True)
class LfsrLut:
    """Bijective 64-entry map between counter states and counts 0..63.

    ``count_to_code[k]`` is the state after k steps from the seed;
    ``code_to_count`` is its inverse. The seed decodes to zero.
    """

    taps: tuple
    count_to_code: tuple
    code_to_count: dict = field(repr=False)

    def encode(self, count: int) -> int:
        if not 0 <= count < COUNT_LEVELS:
            raise ValueError(f"count {count} outside 0..{COUNT_LEVELS - 1}")
        return self.count_to_code[count]

    def decode(self, code: int) -> int:
        try:
            return self.code_to_count[code]
        except KeyError:
            raise ValueError(f"state {code:#04x} is not one of the 64 "
                             "counting states") from None


def build_lut(taps=DEFAULT_TAPS) -> LfsrLut:
    """Walk the counter from the seed and freeze the first 64 states.

    Raises ShortCycleError (naming the offending taps) when fewer than 64
    distinct states are reachable.
    """
    taps = _check_taps(taps)
    walk = enumerate_states(taps, limit=COUNT_LEVELS)
    if len(walk) < COUNT_LEVELS:
        raise ShortCycleError(
            f"taps {taps} reach only {len(walk)} distinct states from seed "
            f"{SEED_STATE:#04x}; 64 are required")
    codes = tuple(walk[:COUNT_LEVELS])
    return LfsrLut(taps=taps, count_to_code=codes,
                   code_to_count={code: k for k, code in enumerate(codes)})


def count_pulses(pulses: int, lut: LfsrLut) -> tuple[int, int]:
    """Clock the counter ``pulses`` times from the seed.

    Returns (final 8-bit state, decoded count); the decode is the
    identity on 0..63 by construction.
    """
    if not 0 <= pulses < COUNT_LEVELS:
        raise ValueError(f"pulse count {pulses} outside 0..{COUNT_LEVELS - 1}")
    code = lut.encode(pulses)
    return code, lut.decode(code)


def decode_add_count(counts):
    """Nearest point on the 0..30 sum grid for an addition-path count.

    The 31 possible sums map injectively onto the 64 counter levels, so
    the noiseless decode recovers the exact sum.
    """
    arr = np.asarray(counts, dtype=np.int64)
    out = (60 * arr + 63) // 126
    return out if arr.ndim else int(out)


def format_lut(lut: LfsrLut) -> str:
    """64 dump lines: state bits Q8..Q1, then the decoded count."""
    lines = []
    for count, code in enumerate(lut.count_to_code):
        bits = format(code, "08b")
        lines.append(f"{bits} {count}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CalibrationRecord:
    """Outcome of one known-input measurement for one word.

    ``offset_counts`` is measured minus expected; a measurement pinned at
    either rail is flagged unreliable because the offset may exceed what
    the rail can reveal.
    """

    known_input_count: int
    measured_count: int
    offset_counts: int
    reliable: bool = True

    def __post_init__(self):
        if abs(self.offset_counts) >= COUNT_LEVELS:
            raise ValueError("calibration offset magnitude must be below 64")


class WordConverter:
    """One word's comparator-plus-counter conversion chain.

    Each word owns an independent comparator with its own static offset,
    so calibration records are per word. A calibrated converter subtracts
    its recorded offset before the count is clamped for reporting, which
    cancels a static integer-count offset exactly for every input.
    """

    def __init__(self, lut: LfsrLut, comparator: ComparatorModel | None = None):
        self.lut = lut
        self.comparator = comparator or ComparatorModel()
        self.calibration: CalibrationRecord | None = None

    def raw_count(self, sample: AnalogSample) -> int:
        return raw_crossing_count(sample, self.comparator)

    def convert(self, sample: AnalogSample) -> tuple[int, int]:
        """Returns (8-bit LFSR code, decoded count 0..63)."""
        raw = self.raw_count(sample)
        if self.calibration is not None:
            raw -= self.calibration.offset_counts
        count = min(max(raw, 0), ADC_MAX_COUNT)
        return self.lut.encode(count), count


def ideal_count(sample: AnalogSample) -> int:
    """Zero-offset reference count for a sample."""
    raw = int(math.floor(crossing_position(sample.level) + 0.5))
    return min(max(raw, 0), ADC_MAX_COUNT)


def calibrate(converter: WordConverter,
              known_input: AnalogSample) -> CalibrationRecord:
    """One-point offset calibration.

    Applies the known input through the word's comparator, records the
    measured count against the ideal one, and arms the converter so
    subsequent conversions subtract the recorded offset. Calibrating
    again with the same input reproduces the same record.
    """
    expected = ideal_count(known_input)
    measured = min(max(converter.raw_count(known_input), 0), ADC_MAX_COUNT)
    record = CalibrationRecord(
        known_input_count=expected,
        measured_count=measured,
        offset_counts=measured - expected,
        reliable=measured not in (0, ADC_MAX_COUNT),
    )
    converter.calibration = record
    return record
