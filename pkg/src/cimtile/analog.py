"""Analog signal chain between stored digital words and ADC clock pulses.

Models the weighted-current DAC built from storage cells, the capacitive
multiplier, the current-domain adder, and the ramp-comparator stage that
turns an analog level into a count of reference-clock pulses.

Comparator mismatch note: static input-referred offsets manifest in this
model as a whole number of missed or extra reference-clock pulses (the
drawn offset is quantized to the nearest count and applied before the
count saturates). This keeps one-point calibration exact: measuring a
single known input recovers the offset completely.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import AnalogSample, SampleSource, check_nibble

DAC_WEIGHTS_NOMINAL = (8.0, 4.0, 2.0, 1.0)  # MSB..LSB branch width ratio
DAC_FULL_SCALE = 15
ADD_FULL_SCALE = 30    # sum of two full-scale operands
MUL_FULL_SCALE = 225   # 15 * 15 product units
ADC_LEVELS = 64
ADC_MAX_COUNT = ADC_LEVELS - 1


class ComparatorPolarity(enum.Enum):
    """Amplifier flavor per operation: the multiplier output sits near
    ground, the adder output near the supply."""

    PMOS_FOR_MUL = "PMOS_FOR_MUL"
    NMOS_FOR_ADD = "NMOS_FOR_ADD"


@dataclass(frozen=True)
class DacModel:
    """4-bit weighted-current DAC.

    ``weights`` are the MSB-to-LSB branch strengths; the noiseless level
    for a code is the weighted bit sum over the nominal full scale of 15,
    clamped to [0, 1]. ``per_level_noise`` is a Gaussian sigma in DAC LSB
    units applied once per conversion.
    """

    weights: tuple = DAC_WEIGHTS_NOMINAL
    per_level_noise: float = 0.0

    def __post_init__(self):
        if len(self.weights) != 4:
            raise ValueError("DAC needs exactly 4 branch weights")
        if self.per_level_noise < 0:
            raise ValueError("per_level_noise must be non-negative")
        levels = [self.level(code) for code in range(16)]
        if levels[0] != 0.0:
            raise ValueError("DAC transfer must map code 0 to level 0")
        for lo, hi in zip(levels, levels[1:]):
            if hi <= lo:
                raise ValueError(
                    "DAC transfer must be strictly monotone; "
                    f"weights {self.weights} are not")

    def level(self, code: int) -> float:
        """Noiseless clamped transfer for one code."""
        code = check_nibble(code)
        acc = 0.0
        for bit_pos, w in enumerate(reversed(self.weights)):
            if (code >> bit_pos) & 1:
                acc += w
        return min(acc / DAC_FULL_SCALE, 1.0)

    @property
    def transfer(self) -> tuple:
        return tuple(self.level(code) for code in range(16))


@dataclass(frozen=True)
class ComparatorModel:
    """Per-word comparator with a static input-referred offset.

    The offset is drawn once per word instance and stays constant within
    a trial. ``offset_counts`` is its pulse-domain effect.
    """

    offset_lsb: float = 0.0
    polarity: ComparatorPolarity = ComparatorPolarity.NMOS_FOR_ADD

    @property
    def offset_counts(self) -> int:
        return int(math.floor(self.offset_lsb + 0.5))


@dataclass(frozen=True)
class RampModel:
    """Globally shared ramp: crosses full scale in exactly ``cycles``
    ADC clock cycles."""

    cycles: int = ADC_LEVELS
    shared: bool = True

    def __post_init__(self):
        if self.cycles != ADC_LEVELS:
            raise ValueError(f"ramp must span exactly {ADC_LEVELS} cycles")


def dac_convert(code: int, model: DacModel,
                rng: np.random.Generator | None = None) -> AnalogSample:
    """Convert a stored 4-bit code to a normalized analog level.

    Noise (if the model carries a nonzero sigma and an rng is given) is
    injected here and recorded on the sample; the result is clamped to
    [0, 1].
    """
    level = model.level(code)
    sigma = 0.0
    if model.per_level_noise > 0.0 and rng is not None:
        sigma = model.per_level_noise / DAC_FULL_SCALE
        level = float(np.clip(level + rng.normal(0.0, sigma), 0.0, 1.0))
    return AnalogSample(level=level, source=SampleSource.DAC, noise_sigma=sigma)


def analog_multiply(vdac: AnalogSample, b_code: int,
                    gain_error: float = 0.0, offset: float = 0.0) -> AnalogSample:
    """Capacitive multiply of an analog operand by a stored digital code.

    Ideal behavior is the bilinear product; gain error and offset default
    to zero and exist only as non-ideality knobs.
    """
    b_code = check_nibble(b_code)
    level = vdac.level * (b_code / DAC_FULL_SCALE)
    level = level * (1.0 + gain_error) + offset
    level = min(max(level, 0.0), 1.0)
    return AnalogSample(level=level, source=SampleSource.MUL,
                        noise_sigma=vdac.noise_sigma)


def analog_add(vdac_a: AnalogSample, vdac_b: AnalogSample) -> AnalogSample:
    """Current-domain sum of two DAC outputs.

    Full scale of the summed range is two full-scale operands, so the
    noiseless level is (a + b)/30 for digital operands a and b.
    """
    level = 0.5 * (vdac_a.level + vdac_b.level)
    level = min(max(level, 0.0), 1.0)
    sigma = math.hypot(vdac_a.noise_sigma, vdac_b.noise_sigma)
    return AnalogSample(level=level, source=SampleSource.ADD, noise_sigma=sigma)


def crossing_position(level: float) -> float:
    """Position of the ramp crossing on the 0..63 count axis."""
    return level * ADC_MAX_COUNT


def raw_crossing_count(sample: AnalogSample, comp: ComparatorModel) -> int:
    """Unclamped pulse count including the comparator's static offset.

    May fall outside 0..63 for offset words; the counter's state sequence
    is long enough to represent that, and calibration removes the offset
    before the count is clamped for reporting.
    """
    return int(math.floor(crossing_position(sample.level) + 0.5)) \
        + comp.offset_counts


def delay_to_pulses(sample: AnalogSample, comp: ComparatorModel,
                    ramp: RampModel) -> int:
    """Nearest-of-64 ramp crossing for the sample, ties toward the larger
    count, saturating at 0 and 63."""
    del ramp  # geometry is fixed by the 64-cycle full-scale contract
    raw = raw_crossing_count(sample, comp)
    return min(max(raw, 0), ADC_MAX_COUNT)
