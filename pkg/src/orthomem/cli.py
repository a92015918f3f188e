"""Command-line interface.

Subcommands: ``simulate`` (trajectory runs from a JSON config),
``orthogonalize`` (project one OST1 matrix), ``metrics`` (mask-sequence
reports), ``apfe`` (feature enhancement of an OST1 tensor), ``bench``
(state-update throughput).

Exit codes are a stable contract: 0 success, 2 usage/validation, 3 I/O
failure, 4 numerical degeneracy (e.g. a rank-deficient polar factor).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import engine, features, metrics as mt, state as st
from .errors import ConfigError, FormatError, RankDeficientError, UndefinedMetricError
from .io import fmt_float, load_config, read_ost1, write_ost1, write_text_atomic
from .linalg import frobenius_norm

TRAJECTORY_COLUMNS = ("step", "msv", "svvar_step", "sigma_min", "sigma_max",
                      "cond", "orth_err", "update_norm", "grad_norm", "warming_up")

METRIC_COLUMNS = ("record", "case", "frame", "dice", "hd95", "flag",
                  "e_tme", "ef_pred", "ef_ref", "ef_corr", "ef_bias", "ef_std")


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(str(c) for c in row) for row in rows)
    return "\r\n".join(lines) + "\r\n"


def _population_stat(sigma):
    mean = float(np.mean(sigma))
    var = float(np.mean((np.asarray(sigma) - mean) ** 2))
    return mean, var


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    result = engine.run(cfg.spec, cfg.variant, record=cfg.cadence, init=cfg.init)

    rows = []
    for d in result.steps:
        msv, svvar = _population_stat(d.sigma)
        smin = float(d.sigma[-1])
        smax = float(d.sigma[0])
        cond = smax / smin if smin > 0.0 else float("inf")
        rows.append((
            d.step, fmt_float(msv), fmt_float(svvar), fmt_float(smin), fmt_float(smax),
            fmt_float(cond), fmt_float(d.orth_err), fmt_float(d.update_norm),
            fmt_float(d.grad_norm), int(d.warming_up),
        ))
    out_dir = cfg.output_dir
    write_text_atomic(os.path.join(out_dir, "trajectory.csv"),
                      _csv_text(TRAJECTORY_COLUMNS, rows))

    rep = result.report
    doc = {
        "variant": cfg.variant.variant.value,
        "seed": cfg.spec.seed,
        "gamma": cfg.variant.gamma,
        "msv": None if rep is None else rep.msv,
        "svvar": None if rep is None else rep.svvar,
        "orth_e": None if rep is None else rep.orth_e,
        "col_r": None if rep is None else rep.col_r,
        "col_r_pre": None if rep is None else rep.col_r_pre,
        "grad_var": None if rep is None else rep.grad_var,
        "upd_var": None if rep is None else rep.upd_var,
        "drift": None if rep is None else rep.drift,
        "msv_series": [] if rep is None else rep.msv_series,
        "sigma_min_series": [] if rep is None else rep.sigma_min_series,
    }
    write_text_atomic(os.path.join(out_dir, "report.json"),
                      json.dumps(doc, indent=2) + "\n")
    return 0


def _cmd_orthogonalize(args) -> int:
    x = read_ost1(args.infile)
    if x.ndim != 2:
        raise ValueError(f"input must be a 2-D tensor, got ndim={x.ndim}")
    if x.shape[0] < x.shape[1]:
        raise ValueError(f"input requires rows >= cols, got {x.shape}")
    cfg = st.ns_config(preset=args.preset, iterations=args.iters)

    def orth_err(mat):
        scaled = mat / args.gamma
        gram = scaled.T @ scaled
        return frobenius_norm(gram - np.eye(gram.shape[0]))

    y = st.orthogonalize(x, cfg, gamma=args.gamma)
    print(f"{fmt_float(orth_err(x))},{fmt_float(orth_err(y))}")
    write_ost1(args.outfile, y)
    return 0


def _load_mask(path) -> np.ndarray:
    if path.endswith(".pgm"):
        return mt.load_pgm(path)
    arr = read_ost1(path)
    if arr.ndim != 2:
        raise FormatError(f"{path}: mask tensor must be 2-D, got ndim={arr.ndim}")
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise FormatError(f"{path}: mask tensor entries must be exactly 0 or 1")
    return arr.astype(bool)


def _discover_cases(root):
    """Map case name -> sorted frame filenames; flat dirs become one case ''. """
    subdirs = sorted(d for d in os.listdir(root) if os.path.isdir(os.path.join(root, d)))
    is_mask = lambda f: f.endswith(".pgm") or f.endswith(".ost1")
    if subdirs:
        return {d: sorted(f for f in os.listdir(os.path.join(root, d)) if is_mask(f))
                for d in subdirs}
    return {"": sorted(f for f in os.listdir(root) if is_mask(f))}


def _cmd_metrics(args) -> int:
    pred_cases = _discover_cases(args.pred)
    gt_cases = _discover_cases(args.gt)
    if sorted(pred_cases) != sorted(gt_cases):
        diff = sorted(set(pred_cases) ^ set(gt_cases))
        raise ValueError(f"case sets differ between --pred and --gt; first mismatch: '{diff[0]}'")
    for case in sorted(pred_cases):
        if pred_cases[case] != gt_cases[case]:
            diff = sorted(set(pred_cases[case]) ^ set(gt_cases[case]))
            raise ValueError(f"frame sets differ in case '{case}'; first mismatch: '{diff[0]}'")

    rows = []
    ef_pred_series, ef_ref_series = [], []
    for case in sorted(pred_cases):
        frames = pred_cases[case]
        if len(frames) < 2:
            raise ValueError(f"case '{case}' has {len(frames)} frame(s); need at least 2")
        pred_masks, gt_masks = [], []
        for frame in frames:
            p = _load_mask(os.path.join(args.pred, case, frame))
            g = _load_mask(os.path.join(args.gt, case, frame))
            pred_masks.append(p)
            gt_masks.append(g)
            d = mt.dice(p, g)
            try:
                h = fmt_float(mt.hd95(p, g, mode=args.hd95_mode, spacing=args.spacing))
                flag = ""
            except UndefinedMetricError:
                h, flag = "", "undefined"
            rows.append(("frame", case, frame, fmt_float(d), h, flag,
                         "", "", "", "", "", ""))

        e_tme = mt.temporal_matching_error(pred_masks, gt_masks)
        try:
            ef_p = mt.ef_area(float(pred_masks[0].sum()), float(pred_masks[-1].sum()))
            ef_r = mt.ef_area(float(gt_masks[0].sum()), float(gt_masks[-1].sum()))
            ef_pred_series.append(ef_p)
            ef_ref_series.append(ef_r)
            rows.append(("case", case, "", "", "", "", fmt_float(e_tme),
                         fmt_float(ef_p), fmt_float(ef_r), "", "", ""))
        except ValueError:
            rows.append(("case", case, "", "", "", "undefined", fmt_float(e_tme),
                         "", "", "", "", ""))

    if len(ef_pred_series) >= 2:
        stats = mt.ef_stats(ef_pred_series, ef_ref_series)
        corr = "" if stats.corr is None else fmt_float(stats.corr)
        rows.append(("cohort", "", "", "", "", "", "", "", "",
                     corr, fmt_float(stats.bias), fmt_float(stats.std)))
    else:
        rows.append(("cohort", "", "", "", "", "", "", "", "", "", "", ""))

    text = _csv_text(METRIC_COLUMNS, rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        write_text_atomic(args.out, text)
    return 0


def _cmd_apfe(args) -> int:
    x = read_ost1(args.infile)
    if x.ndim != 4:
        raise ValueError(f"input must be a 4-D tensor (b, c, h, w), got ndim={x.ndim}")
    weights = features.load_branch_weights(args.weights)
    z = features.enhance(x, args.k, weights)
    write_ost1(args.outfile, z)
    return 0


def _cmd_bench(args) -> int:
    c = args.size
    cfg = st.ns_config(preset="strict", iterations=args.iters)
    rng = np.random.default_rng(0)
    pool = 256
    keys = rng.standard_normal((pool, c))
    keys /= np.linalg.norm(keys, axis=1, keepdims=True)
    values = rng.standard_normal((pool, c))
    gates = st.GateParams(0.95, 0.9)

    def timed_steps(n, state):
        t0 = time.perf_counter()
        for i in range(n):
            state, _ = st.step(state, keys[i % pool], values[i % pool], gates, cfg)
        return time.perf_counter() - t0, state

    state = st.random_orthogonal_state(c, c, gamma=2.0, seed=0)
    elapsed, state = timed_steps(32, state)  # warm caches, settle the state
    n = max(32, int(32 * 0.25 / max(elapsed, 1e-9)))
    rates = []
    for _ in range(5):
        elapsed, state = timed_steps(n, state)
        rates.append(n / elapsed)
    rate = sorted(rates)[2]
    print(f"bench,osu_step,{c},{fmt_float(rate)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orthomem",
        description="Manifold-constrained recurrent memory experiments and metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured trajectory, write CSV + JSON")
    p.add_argument("--config", required=True, help="JSON experiment configuration")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("orthogonalize", help="project an OST1 matrix onto the scaled manifold")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--iters", type=int, default=15)
    p.add_argument("--preset", choices=("strict", "fast"), default="strict")
    p.set_defaults(func=_cmd_orthogonalize)

    p = sub.add_parser("metrics", help="mask-sequence segmentation and function metrics")
    p.add_argument("--pred", required=True, help="directory of predicted mask sequences")
    p.add_argument("--gt", required=True, help="directory of reference mask sequences")
    p.add_argument("--hd95-mode", choices=mt.HD95_MODES, default="pooled")
    p.add_argument("--spacing", type=float, default=1.0, help="isotropic pixel spacing for hd95")
    p.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("apfe", help="run feature enhancement over an OST1 tensor")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--weights", required=True, help="weights manifest JSON")
    p.add_argument("--k", type=int, required=True, help="odd local-field window size")
    p.add_argument("--out", dest="outfile", required=True)
    p.set_defaults(func=_cmd_apfe)

    p = sub.add_parser("bench", help="measure state-update throughput")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--iters", type=int, default=5)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RankDeficientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, FormatError, UndefinedMetricError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
