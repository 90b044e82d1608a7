"""Command-line front end.

Every run writes its results, the effective merged configuration, and a
machine-readable summary (seed and config hash included) into the output
directory. With a fixed seed the whole directory is byte-identical
across reruns; the only timestamp lives in the single-line run_meta.txt.

Matrix inputs must be square; zero-pad rectangular data to
max(rows, cols) before invoking the transpose.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import sys
from pathlib import Path

import numpy as np

from .core import MatrixTile, TileError, load_matrix, save_matrix, seeded_rng
from .config import TileConfig, VariationConfig, config_from_dict, \
    config_hash, config_to_dict, default_config, dump_config, load_config
from .arrays import TEdramArray, TSramArray
from .transpose import OPS_PER_WORD as TRANSPOSE_OPS_PER_WORD, \
    compile_transpose, execute_transpose, format_schedule
from .compute import OPS_PER_WORD as EWISE_OPS_PER_WORD, EwiseJob, EwiseOp, \
    MacJob, WordBank, load_job, run_ewise, run_mac
from .lfsr import build_lut, decode_add_count, format_lut
from . import metrics
from .metrics import ConversionPipeline, energy_rollup, estimate_enob, \
    linearity_sweep, margin_analytics, signal_margin_samples, throughput

EX_OK = 0
EX_USAGE = 64
EX_INPUT = 65
EX_INTERNAL = 70


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EX_USAGE, f"error kind=usage msg={message!r}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cimtile",
                     description="Stacked SRAM/eDRAM in-memory matrix "
                                 "compute tile simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int, help="override the config RNG seed")
        p.add_argument("--out", default="cimtile_out", help="output directory")
        p.add_argument("--taps", help="LFSR taps, e.g. 5,4,3,1")
        p.add_argument("--n", type=int, help="expected tile dimension")

    p = sub.add_parser("transpose", help="in-situ transpose of one tile")
    common(p)
    p.add_argument("--in", dest="input", required=True, help="input matrix file")

    for name, op in (("ewise-mul", EwiseOp.MUL), ("ewise-add", EwiseOp.ADD)):
        p = sub.add_parser(name, help=f"element-wise {op.value}")
        common(p)
        p.add_argument("--a", help="operand A matrix file")
        p.add_argument("--b", help="operand B matrix file")
        p.add_argument("--job", help="job description file (overrides --a/--b)")
        p.add_argument("--trials", type=int, default=1,
                       help="Monte-Carlo trials (one RNG stream each)")
        p.set_defaults(ewise_op=op)

    p = sub.add_parser("mac", help="binary-activation dot products")
    common(p)
    p.add_argument("--in", dest="input", required=True, help="weight matrix file")
    p.add_argument("--act", required=True,
                   help="activation file: one line of 0/1 enables")

    p = sub.add_parser("mc-sweep", help="Monte-Carlo mismatch sweep")
    common(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--workers", type=int, default=1,
                   help="process workers; results merge in stream order")

    p = sub.add_parser("lut-dump", help="dump the 64-entry counter LUT")
    common(p)
    return parser


def _effective_config(args) -> TileConfig:
    config = load_config(args.config) if args.config else default_config()
    doc = config_to_dict(config)
    if args.seed is not None:
        doc["variation"]["rng_seed"] = int(args.seed)
    if getattr(args, "n", None) is not None:
        doc["n"] = int(args.n)
    if args.taps:
        doc["lfsr_taps"] = [int(t) for t in args.taps.split(",") if t]
    return config_from_dict(doc)


def _prepare_out(args, config: TileConfig) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(config, out / "effective_config.yaml")
    return out


def _finish(out: Path, payload: dict) -> None:
    metrics.write_summary_json(payload, out / "summary.json")
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    (out / "run_meta.txt").write_text(f"completed_utc={stamp}\n")


def _base_payload(command: str, config: TileConfig,
                  inputs: list | None = None) -> dict:
    return {"command": command, "seed": config.variation.rng_seed,
            "config_hash": config_hash(config),
            "inputs": [str(p) for p in (inputs or [])]}


def _cmd_transpose(args) -> int:
    config = _effective_config(args)
    out = _prepare_out(args, config)
    tile = load_matrix(args.input, expected_n=args.n)
    layer_a = TSramArray(tile)
    layer_b = TEdramArray(n=tile.n,
                          retention_limit=config.retention_limit_cycles)
    schedule = compile_transpose(tile.n)
    layer_a, layer_b, ledger = execute_transpose(layer_a, layer_b, schedule,
                                                 config)
    save_matrix(layer_a.tile, out / "result.mat")
    save_matrix(layer_b.tile, out / "residual_b.mat")
    (out / "schedule.txt").write_text(format_schedule(schedule))

    ops = TRANSPOSE_OPS_PER_WORD * tile.n * tile.n
    report = throughput(ops, ledger.total_latency_s, ledger.total_energy_j)
    rows = energy_rollup(ledger)
    metrics.write_energy_csv(rows, out / "energy_breakdown.csv")
    metrics.write_throughput_csv([("transpose", tile.n, report)],
                                 out / "throughput.csv")
    payload = _base_payload("transpose", config, [args.input])
    payload.update(metrics.summary_payload(
        ledger=ledger, throughput_entries=[("transpose", tile.n, report)],
        energy_rows=rows, n=tile.n, cycles=ledger.extras["cycles"]))
    _finish(out, payload)
    return EX_OK


def _cmd_ewise(args) -> int:
    config = _effective_config(args)
    out = _prepare_out(args, config)
    op: EwiseOp = args.ewise_op
    trials = args.trials
    a_path, b_path = args.a, args.b
    if args.job:
        job_spec = load_job(args.job)
        if job_spec.op is not op:
            raise TileError(f"job file op {job_spec.op.value!r} does not "
                            f"match the {op.value} subcommand")
        a_path, b_path = job_spec.a_path, job_spec.b_path
        trials = job_spec.trials
    if not a_path or not b_path:
        raise TileError("element-wise runs need --a and --b (or --job)")
    if trials < 1:
        raise TileError("trials must be at least 1")

    a = load_matrix(a_path, expected_n=args.n)
    b = load_matrix(b_path, expected_n=args.n)
    job = EwiseJob(op=op, a=a, b=b)
    seed = config.variation.rng_seed

    all_values = []
    first = None
    ledger = None
    for t in range(trials):
        rng = seeded_rng(seed, t)
        result, ledger = run_ewise(job, config, rng)
        all_values.append(result.values)
        if t == 0:
            first = result
    save_matrix(first.counts, out / "result_counts.mat")
    save_matrix(first.codes, out / "result_codes.mat")
    save_matrix(first.values, out / "result_values.mat")
    if trials > 1:
        stack = np.stack(all_values)
        lines = ["row,col,mean,std"]
        for i in range(job.n):
            for j in range(job.n):
                lines.append(f"{i},{j},{stack[:, i, j].mean():.6g},"
                             f"{stack[:, i, j].std():.6g}")
        (out / "trial_stats.csv").write_text("\n".join(lines) + "\n")

    ops = EWISE_OPS_PER_WORD * job.n * job.n
    report = throughput(ops, ledger.total_latency_s, ledger.total_energy_j)
    rows = energy_rollup(ledger)
    metrics.write_energy_csv(rows, out / "energy_breakdown.csv")
    metrics.write_throughput_csv([(op.value, job.n, report)],
                                 out / "throughput.csv")
    payload = _base_payload(f"ewise-{op.value}", config,
                            [a_path, b_path])
    payload.update(metrics.summary_payload(
        ledger=ledger, throughput_entries=[(op.value, job.n, report)],
        energy_rows=rows, n=job.n, trials=trials))
    _finish(out, payload)
    return EX_OK


def _cmd_mac(args) -> int:
    config = _effective_config(args)
    out = _prepare_out(args, config)
    weights = load_matrix(args.input, expected_n=args.n)
    try:
        acts = [int(tok) for tok in Path(args.act).read_text().split()]
    except OSError as exc:
        raise TileError(f"cannot read activations: {exc}") from exc
    except ValueError as exc:
        raise TileError(f"malformed activation file: {exc}") from exc
    job = MacJob(weights=weights, activations=np.array(acts))
    rng = seeded_rng(config.variation.rng_seed, 0)
    result, ledger = run_mac(job, config, rng)

    save_matrix(result.column_sums.reshape(1, -1), out / "column_sums.mat")
    save_matrix(result.counts.reshape(1, -1), out / "result_counts.mat")
    ops = 2 * ledger.extras["active_rows"] * job.n
    rows = energy_rollup(ledger)
    metrics.write_energy_csv(rows, out / "energy_breakdown.csv")
    entries = []
    if ops > 0:
        report = throughput(ops, ledger.total_latency_s, ledger.total_energy_j)
        entries = [("mac", job.n, report)]
        metrics.write_throughput_csv(entries, out / "throughput.csv")
    payload = _base_payload("mac", config, [args.input, args.act])
    payload.update(metrics.summary_payload(
        ledger=ledger, throughput_entries=entries, energy_rows=rows,
        n=job.n, full_scale=result.full_scale))
    _finish(out, payload)
    return EX_OK


def _mc_trial(payload) -> dict:
    """One Monte-Carlo trial; returns plain floats so results pickle."""
    config_doc, seed, t = payload
    config = config_from_dict(config_doc)
    rng = seeded_rng(seed, t)
    n = 16
    grid = np.arange(16, dtype=np.uint8)
    a = MatrixTile(np.repeat(grid, 16).reshape(16, 16))  # rows are operand a
    b = MatrixTile(np.tile(grid, 16).reshape(16, 16))

    row = {"trial": t}
    for op in (EwiseOp.ADD, EwiseOp.MUL):
        bank = WordBank.draw(n, op, config, rng)
        bank.calibrate(config.calibration_level)
        result, _ = run_ewise(EwiseJob(op=op, a=a, b=b), config, rng, bank)
        if op is EwiseOp.ADD:
            ideal = a.elems.astype(np.int64) + b.elems.astype(np.int64)
            errs = result.values - ideal
        else:
            prod = a.elems.astype(np.int64) * b.elems.astype(np.int64)
            ideal = (2 * 63 * prod + 225) // 450
            errs = result.counts - ideal
        row[f"{op.value}_max_abs_err"] = int(np.abs(errs).max())
        row[f"{op.value}_exact_frac"] = float(np.mean(errs == 0))
        row[f"{op.value}_offset_std"] = float(bank.offset_lsb.std())
        row[f"{op.value}_cal_reliable_frac"] = float(bank.cal_reliable.mean())

    sigma = config.variation.dac_sigma_lsb
    margins = signal_margin_samples("dac", 1, sigma, rng)
    for (lo, hi), samples in margins.items():
        row[f"dac_margin_{lo}_{hi}"] = float(samples[0])
    return row


def _cmd_mc_sweep(args) -> int:
    config = _effective_config(args)
    out = _prepare_out(args, config)
    if args.trials < 1:
        raise TileError("trials must be at least 1")
    seed = config.variation.rng_seed
    doc = config_to_dict(config)
    payloads = [(doc, seed, t) for t in range(args.trials)]

    if args.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_mc_trial, payloads))
    else:
        rows = [_mc_trial(p) for p in payloads]
    rows.sort(key=lambda r: r["trial"])  # deterministic merge order

    scalar_keys = [k for k in rows[0] if not k.startswith("dac_margin_")]
    lines = [",".join(scalar_keys)]
    for row in rows:
        lines.append(",".join(
            f"{row[k]:.6g}" if isinstance(row[k], float) else str(row[k])
            for k in scalar_keys))
    (out / "calibration.csv").write_text("\n".join(lines) + "\n")

    sigma = config.variation.dac_sigma_lsb
    margin_lines = ["pair_lo,pair_hi,mean,std,analytic_mean,analytic_sigma"]
    for c in range(15):
        samples = np.array([r[f"dac_margin_{c}_{c + 1}"] for r in rows])
        mean, asigma = margin_analytics("dac", (c, c + 1), sigma)
        margin_lines.append(f"{c},{c + 1},{samples.mean():.6g},"
                            f"{samples.std():.6g},{mean:.6g},{asigma:.6g}")
    (out / "margins.csv").write_text("\n".join(margin_lines) + "\n")

    lin_rng = seeded_rng(seed, args.trials)
    lin_rows = linearity_sweep("add", sigma, max(args.trials, 100), lin_rng)
    metrics.write_linearity_csv(lin_rows, out / "linearity_add.csv")
    lin_rows_mul = linearity_sweep("mul", sigma, max(args.trials, 100), lin_rng)
    metrics.write_linearity_csv(lin_rows_mul, out / "linearity_mul.csv")

    enob_rng = seeded_rng(seed, args.trials + 1)
    pipeline = ConversionPipeline(noise_sigma_level=config.enob_noise_sigma)
    enob = estimate_enob(pipeline, max(100_000, args.trials), enob_rng)
    (out / "enob.csv").write_text(
        "noise_sigma_level,trials,rms_error_lsb,enob_bits\n"
        f"{enob.noise_sigma_level:.6g},{enob.trials},"
        f"{enob.rms_error_lsb:.6g},{enob.enob_bits:.6g}\n")

    payload = _base_payload("mc-sweep", config)
    payload.update(metrics.summary_payload(
        linearity_rows=lin_rows, trials=args.trials,
        enob={"rms_error_lsb": enob.rms_error_lsb,
              "enob_bits": enob.enob_bits,
              "noise_sigma_level": enob.noise_sigma_level},
        calibration_rows=rows[:16]))
    _finish(out, payload)
    return EX_OK


def _cmd_lut_dump(args) -> int:
    config = _effective_config(args)
    out = _prepare_out(args, config)
    lut = build_lut(config.lfsr_taps)
    (out / "lut.txt").write_text(format_lut(lut))
    payload = _base_payload("lut-dump", config)
    payload["taps"] = list(config.lfsr_taps)
    payload["states"] = [format(c, "08b") for c in lut.count_to_code]
    _finish(out, payload)
    return EX_OK


_COMMANDS = {
    "transpose": _cmd_transpose,
    "ewise-mul": _cmd_ewise,
    "ewise-add": _cmd_ewise,
    "mac": _cmd_mac,
    "mc-sweep": _cmd_mc_sweep,
    "lut-dump": _cmd_lut_dump,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except TileError as exc:
        print(f"error kind=input msg={str(exc)!r}", file=sys.stderr)
        return EX_INPUT
    except Exception as exc:  # invariant violation, report and fail loud
        print(f"error kind=internal msg={str(exc)!r}", file=sys.stderr)
        return EX_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
