"""Command-line entry point: ``pareto``, ``sumrate``, ``decompose`` and ``single``."""

import argparse
import json
import os
import sys

import numpy as np

from ..errors import MemsError
from ..precoder import OptimizerConfig, solve
from ..rates import Weights, rate_breakdown
from .config import load_config
from .experiments import _trial_channels, run_decompose, run_pareto, run_sumrate_vs_snr
from .output import emit_outputs

__all__ = ["main", "build_parser"]


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser():
    parser = argparse.ArgumentParser(prog="mems-precoding", description="Secure ISAC precoding experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("pareto", "sweep w_c and trace the secrecy/sensing region"),
        ("sumrate", "weighted rate versus SNR"),
        ("decompose", "subspace dimensions and DoF report"),
        ("single", "one solve with its full trace"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML experiment file")
        p.add_argument("--snr-db", type=_float_list, help="SNR in dB (comma-separated list allowed)")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int, help="base seed; trial i uses seed + i")
        p.add_argument("--out", help="output directory")
        p.add_argument("--weights", type=_float_list, help="comma-separated w_c values")
        p.add_argument("--n-t", type=int, help="antennas at every node")
        p.add_argument("--streams", type=int, help="number of streams N_s")
        p.add_argument("--plot", action="store_true", help="also write an SVG of the rate region")
        if name == "single":
            p.add_argument("--w-c", type=float, default=None, help="secrecy weight (default: first sweep weight)")
    return parser


def _config_from_args(args):
    overrides = {
        "trials": args.trials,
        "base_seed": args.seed,
        "out_dir": args.out,
        "weights": args.weights,
        "N_s": args.streams,
        "plot": True if args.plot else None,
    }
    if args.snr_db is not None:
        overrides["snr_db"] = args.snr_db if len(args.snr_db) > 1 else args.snr_db[0]
    if args.n_t is not None:
        overrides.update(n_t=args.n_t, n_c=args.n_t, n_e=args.n_t, n_s=args.n_t)
    return load_config(args.config, **overrides)


def _cmd_sweep(cfg, runner, default_prefix):
    records = runner(cfg)
    prefix = cfg.prefix or default_prefix
    paths = emit_outputs(records, cfg.out_dir, prefix=prefix, plot=cfg.plot)
    print(f"{len(records)} records")
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def _cmd_decompose(cfg):
    rep = run_decompose(cfg)
    print(f"seed {rep['seed']}, n_t = {rep['n_t']}")
    print("label  k")
    for label in rep["labels"]:
        print(f"{label:<6} {rep['dims'][label]}")
    print("w_c    d_max     useful_dim")
    for row in rep["dof"]:
        print(f"{row['w_c']:<6.3g} {row['d_max']:<9.4g} {row['useful_dim']}")
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, f"{cfg.prefix or 'decompose'}.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("label,k\n")
        for label in rep["labels"]:
            fh.write(f"{label},{rep['dims'][label]}\n")
    print(f"csv: {path}")
    return 0


def _cmd_single(cfg, w_c):
    if w_c is None:
        w_c = cfg.weights[0] if cfg.weights else 0.5
    w = Weights(float(w_c), 1.0 - float(w_c))
    snr = cfg.snr_list[0]
    P = 10.0 ** (snr / 10.0)
    ch = _trial_channels(cfg, cfg.seed(0))
    opt = OptimizerConfig(N_s=cfg.streams, P_tot=P, w=w, tol=cfg.tolerance, **cfg.caps)
    res = solve(ch, opt)
    R_c, R_e, R_s = rate_breakdown(ch, res.precoder.F)
    dump = {
        "seed": cfg.seed(0),
        "w_c": w.w_c,
        "snr_db": snr,
        "N_s": cfg.streams,
        "initial_objective": res.initial_objective,
        "objective_trace": res.objective_trace.tolist(),
        "iters": {"outer": res.iters[0], "fp": res.iters[1], "sca": res.iters[2]},
        "converged": res.converged,
        "R_c": R_c,
        "R_e": R_e,
        "R_sec": max(0.0, R_c - R_e),
        "R_s": R_s,
        "powers": res.precoder.p.tolist(),
        "active": res.precoder.active().tolist(),
        "wall_ms": res.wall_ms,
    }
    text = json.dumps(dump, indent=2)
    print(text)
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, f"{cfg.prefix or 'single'}.json"), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "pareto":
            return _cmd_sweep(cfg, run_pareto, "pareto")
        if args.command == "sumrate":
            return _cmd_sweep(cfg, run_sumrate_vs_snr, "sumrate")
        if args.command == "decompose":
            return _cmd_decompose(cfg)
        return _cmd_single(cfg, args.w_c)
    except (MemsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
