"""Numpy reference kernels.

The compiled backend must reproduce these bit-for-bit: identical IEEE
double operations in identical order, with all randomness drawn by the
caller and passed in as arrays.
"""

from __future__ import annotations

import numpy as np

_FS = 15.0
_MAX_COUNT = 63.0


def quantize_counts(crossings, lo: int = 0, hi: int = 63) -> np.ndarray:
    """clamp(floor(x + 0.5), lo, hi) per element."""
    counts = np.floor(np.asarray(crossings, dtype=np.float64) + 0.5)
    return np.clip(counts, lo, hi).astype(np.int64)


def convert_counts(crossings, offset_counts, cal_counts) -> np.ndarray:
    """Offset-aware conversion: the static offset lands before clamping,
    the calibration correction removes it, then the count saturates."""
    raw = np.floor(np.asarray(crossings, dtype=np.float64) + 0.5).astype(np.int64)
    raw = raw + np.asarray(offset_counts, dtype=np.int64) \
        - np.asarray(cal_counts, dtype=np.int64)
    return np.clip(raw, 0, 63)


def ewise_levels(a_codes, b_codes, is_mul: bool,
                 noise_a, noise_b) -> np.ndarray:
    """Analog front end for a batch of operand pairs.

    Multiply: one noisy DAC level times the digital b code. Add: two
    noisy DAC levels summed onto the doubled full scale.
    """
    a = np.asarray(a_codes, dtype=np.float64)
    b = np.asarray(b_codes, dtype=np.float64)
    la = np.clip(a / _FS + np.asarray(noise_a, dtype=np.float64), 0.0, 1.0)
    if is_mul:
        level = np.clip(la * (b / _FS), 0.0, 1.0)
    else:
        lb = np.clip(b / _FS + np.asarray(noise_b, dtype=np.float64), 0.0, 1.0)
        level = (la + lb) * 0.5
    return level


def ewise_convert(a_codes, b_codes, is_mul: bool, noise_a, noise_b,
                  offset_counts, cal_counts) -> np.ndarray:
    """Fused pipeline: DAC, analog op, ramp crossing, offset, calibration,
    saturation. Returns int64 counts in 0..63."""
    level = ewise_levels(a_codes, b_codes, is_mul, noise_a, noise_b)
    return convert_counts(level * _MAX_COUNT, offset_counts, cal_counts)
