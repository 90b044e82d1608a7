"""Acceptance suite: every criterion at its stated tolerance, one
pass/fail line per criterion (run with -s to see them live)."""

import dataclasses
import time
from contextlib import contextmanager

import numpy as np
import pytest

from cimtile.arrays import SwapDirection, TEdramArray, TSramArray
from cimtile.compute import EwiseJob, EwiseOp, MacJob, WordBank, run_ewise, \
    run_mac
from cimtile.config import VariationConfig, default_config
from cimtile.core import MatrixTile, seeded_rng
from cimtile.lfsr import build_lut, enumerate_states
from cimtile.metrics import ConversionPipeline, estimate_enob, throughput
from cimtile.transpose import compile_transpose, execute_transpose, \
    transpose_tile

REL_TOL = 1e-3  # the stated 0.1% for all published operating points


def brute_force_mul_counts(a, b):
    """Independent multiply oracle: exact integer rounding of the
    64-level quantization of the a*b product, ties toward larger."""
    prod = np.asarray(a, dtype=np.int64) * np.asarray(b, dtype=np.int64)
    return (2 * 63 * prod + 225) // 450


@contextmanager
def criterion(num, desc):
    try:
        yield
    except BaseException:
        print(f"FAIL criterion {num}: {desc}")
        raise
    print(f"PASS criterion {num}: {desc}")


def all_pairs():
    grid = np.arange(16, dtype=np.uint8)
    a = MatrixTile(np.repeat(grid, 16).reshape(16, 16))
    b = MatrixTile(np.tile(grid, 16).reshape(16, 16))
    return a, b


def test_criterion_1_transpose_property():
    config = default_config()
    rng = np.random.default_rng(2024)
    sizes = [2, 3, 4, 8, 16, 32]
    start = time.monotonic()
    with criterion(1, "transpose correctness on 500 random tiles"):
        for idx in range(500):
            n = sizes[idx % len(sizes)]
            tile = MatrixTile(rng.integers(0, 16, (n, n), dtype=np.uint8))
            layer_a = TSramArray(tile)
            layer_b = TEdramArray(n=n)
            execute_transpose(layer_a, layer_b, compile_transpose(n), config)
            assert np.array_equal(layer_a.grid, tile.elems.T)
            assert np.diag(layer_a.write_counts).sum() == 0
            assert np.diag(layer_b.write_counts).sum() == 0
            if idx % 10 == 0:  # involution spot-checked throughout
                again, _, _ = transpose_tile(layer_a.tile, config)
                assert np.array_equal(again.elems, tile.elems)
        elapsed = time.monotonic() - start
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def test_criterion_2_transpose_reference_figures():
    config = default_config()
    with criterion(2, "32x32 transpose: 33 cycles, 264 ns, 320.55 nJ, "
                      "15.51 GOPS, 12.77 GOPS/W"):
        schedule = compile_transpose(32)
        assert schedule.cycle_count == 33
        tile = MatrixTile(np.zeros((32, 32), dtype=np.uint8))
        _, _, ledger = transpose_tile(tile, config)
        assert ledger.extras["cycles"] == 33
        assert ledger.total_latency_s == pytest.approx(264e-9, rel=REL_TOL)
        assert ledger.total_energy_j == pytest.approx(320.55e-9, rel=REL_TOL)
        rep = throughput(4 * 32 * 32, ledger.total_latency_s,
                         ledger.total_energy_j)
        assert rep.gops == pytest.approx(15.51, rel=REL_TOL)
        assert rep.gops_per_w == pytest.approx(12.77, rel=REL_TOL)


def test_criterion_3_worked_step2_traces():
    with criterion(3, "4x4 step-2 traces: a12 8->5, a14 12->3; "
                      "b21 11->6, b41 3->12"):
        a_grid = np.zeros((4, 4), dtype=np.uint8)
        a_grid[0, 1], a_grid[0, 3] = 8, 12
        a_grid[1, 0], a_grid[3, 0] = 5, 3
        layer_a = TSramArray(MatrixTile(a_grid))
        assert layer_a.grid[0, 1] == 8 and layer_a.grid[0, 3] == 12
        layer_a.intra_column_swap_step(1, SwapDirection.LOWER_TO_UPPER)
        assert layer_a.grid[0, 1] == 5
        assert layer_a.grid[0, 3] == 3

        b_grid = np.zeros((4, 4), dtype=np.uint8)
        b_grid[0, 1], b_grid[0, 3] = 6, 12
        b_grid[1, 0], b_grid[3, 0] = 11, 3
        layer_b = TEdramArray(MatrixTile(b_grid, layer=TEdramArray.layer))
        assert layer_b.grid[1, 0] == 11 and layer_b.grid[3, 0] == 3
        layer_b.intra_column_swap_step(1, SwapDirection.UPPER_TO_LOWER)
        assert layer_b.grid[1, 0] == 6
        assert layer_b.grid[3, 0] == 12


def test_criterion_4_add_exact_all_pairs():
    config = default_config()
    a, b = all_pairs()
    with criterion(4, "element-wise add exact on all 256 operand pairs"):
        result, _ = run_ewise(EwiseJob(op=EwiseOp.ADD, a=a, b=b), config,
                              seeded_rng(1, 0))
        ideal = a.elems.astype(np.int64) + b.elems.astype(np.int64)
        assert np.array_equal(result.values, ideal)


def test_criterion_5_mul_equals_bruteforce_oracle():
    config = default_config()
    a, b = all_pairs()
    with criterion(5, "element-wise mul equals round(a*b*63/225) on all "
                      "256 pairs"):
        result, _ = run_ewise(EwiseJob(op=EwiseOp.MUL, a=a, b=b), config,
                              seeded_rng(1, 0))
        assert np.array_equal(result.counts,
                              brute_force_mul_counts(a.elems, b.elems))


def test_criterion_6_ewise_reference_figures():
    config = default_config()
    tile = MatrixTile(np.zeros((32, 32), dtype=np.uint8))
    cases = [
        (EwiseOp.MUL, 588e-9, 6e-9, 13.93, 436.61),
        (EwiseOp.ADD, 294e-9, 3e-9, 27.86, 432.25),
    ]
    with criterion(6, "32x32 ewise: 588 ns/13.93/436.61 (mul), "
                      "294 ns/27.86/432.25 (add), 64-cycle conversion"):
        for op, latency, cycle, gops, gops_per_w in cases:
            _, ledger = run_ewise(EwiseJob(op=op, a=tile, b=tile), config,
                                  seeded_rng(1, 0))
            assert ledger.extras["adc_cycles"] == 64
            assert ledger.extras["adc_cycle_s"] == pytest.approx(cycle)
            assert ledger.latency_s["convert"] == pytest.approx(64 * cycle)
            assert ledger.total_latency_s == pytest.approx(latency, rel=REL_TOL)
            rep = throughput(8 * 32 * 32, ledger.total_latency_s,
                             ledger.total_energy_j)
            assert rep.gops == pytest.approx(gops, rel=REL_TOL)
            assert rep.gops_per_w == pytest.approx(gops_per_w, rel=REL_TOL)


def test_criterion_7_lfsr_soundness():
    config = default_config()
    with criterion(7, "configured taps reach 64 distinct states; "
                      "encode/decode is the identity on 0..63"):
        walk = enumerate_states(config.lfsr_taps)
        assert len(walk) >= 64
        assert len(set(walk[:64])) == 64
        lut = build_lut(config.lfsr_taps)
        for k in range(64):
            assert lut.decode(lut.encode(k)) == k


def test_criterion_8_calibration_recovers_every_input():
    base = default_config()
    config = dataclasses.replace(
        base, variation=VariationConfig(comparator_offset_sigma_lsb=1.0,
                                        rng_seed=404))
    a, b = all_pairs()
    ideal_add = a.elems.astype(np.int64) + b.elems.astype(np.int64)
    ideal_mul = brute_force_mul_counts(a.elems, b.elems)
    with criterion(8, "1000 Gaussian-offset trials: calibrated output "
                      "equals zero-offset output for every input"):
        for trial in range(1000):
            rng = seeded_rng(404, trial)
            for op, ideal in ((EwiseOp.ADD, ideal_add),
                              (EwiseOp.MUL, ideal_mul)):
                bank = WordBank.draw(16, op, config, rng)
                bank.calibrate(config.calibration_level)
                result, _ = run_ewise(EwiseJob(op=op, a=a, b=b), config,
                                      rng, bank=bank)
                got = result.values if op is EwiseOp.ADD else result.counts
                assert np.array_equal(got, ideal), f"trial {trial}"


def test_criterion_9_enob():
    config = default_config()
    with criterion(9, "noiseless ENOB in [5.9, 6.0]; documented sigma "
                      f"{config.enob_noise_sigma} gives 4.78 +/- 0.15"):
        clean = estimate_enob(ConversionPipeline(0.0), 150_000,
                              seeded_rng(42, 0))
        assert 5.9 <= clean.enob_bits <= 6.0
        noisy = estimate_enob(ConversionPipeline(config.enob_noise_sigma),
                              150_000, seeded_rng(42, 1))
        assert noisy.trials >= 100_000
        assert noisy.enob_bits == pytest.approx(4.78, abs=0.15)


def test_criterion_10_mac_property():
    config = default_config()
    rng = np.random.default_rng(555)
    with criterion(10, "200 random 8x8 binary MAC jobs match the integer "
                       "dot-product oracle, pre- and post-quantization"):
        for _ in range(200):
            weights = MatrixTile(rng.integers(0, 16, (8, 8), dtype=np.uint8))
            acts = rng.integers(0, 2, size=8)
            result, _ = run_mac(MacJob(weights=weights, activations=acts),
                                config, seeded_rng(1, 0))
            oracle = acts.astype(np.int64) @ weights.elems.astype(np.int64)
            assert np.array_equal(result.column_sums, oracle)
            active = int(acts.sum())
            assert result.full_scale == 15 * active
            if active == 0:
                assert not result.counts.any()
            else:
                fs = result.full_scale
                expect = (2 * 63 * oracle + fs) // (2 * fs)
                assert np.array_equal(result.counts, expect)
