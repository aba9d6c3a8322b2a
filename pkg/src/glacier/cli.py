"""Command-line front end.

    glacier prop1 --N 2500,10000,40000 --C 0.45,0.75,1,1.5,2 --trials 2000 --seed 7 --out runs/
    glacier scales --N 10000 --depth 2 --exact-pi1 --seed 5 [--out runs/]
    glacier profile --N 100000 --trials 300 --seed 11 --out runs/
    glacier freeze-diag --N 10000 --level 2 --trials 200 --seed 13 --out runs/
    glacier estimate pi|theta|L|F|crossing ... --seed 3 [--out runs/]

A config file (--config FILE, key=value lines, '#' comments) supplies
defaults; explicit flags override it.  Exit codes: 0 success, 1 validation
error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from .estimators import (EstimatorError, estimate_crossing, estimate_F, estimate_L,
                         estimate_pi, estimate_selfdual_crossing, estimate_theta,
                         theta_proxy_box)
from .experiments import (ConfigError, ExperimentConfig, WindowUnreachableError,
                          load_config, parse_config_items, run_freeze_diagnostics,
                          run_prop1_profile, run_scale_profile)
from .lattice import LatticeError
from .scales import ScaleError, check_scale_bounds, check_volume_plateau, compute_scales


def _add_common(sub):
    sub.add_argument("--config", help="key=value config file; flags override it")
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument("--trials", type=int)
    sub.add_argument("--workers", type=int)
    sub.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glacier",
                                 description="volume-frozen percolation laboratory")
    sp = ap.add_subparsers(dest="command", required=True)

    p1 = sp.add_parser("prop1", help="F_N(ceil(C sqrt N)) profile over a (C, N) grid")
    p1.add_argument("--N", help="comma-separated N values")
    p1.add_argument("--C", help="comma-separated C values")
    _add_common(p1)

    ps = sp.add_parser("scales", help="exceptional-scale table m_1..m_K")
    ps.add_argument("--N", type=int, required=True)
    ps.add_argument("--depth", type=int, default=2)
    ps.add_argument("--exact-pi1", action="store_true", default=True)
    ps.add_argument("--mc-pi1", dest="exact_pi1", action="store_false",
                    help="estimate pi(1) instead of using the exact 15/16")
    ps.add_argument("--pi-stderr", type=float, default=0.002)
    _add_common(ps)

    pp = sp.add_parser("profile", help="F_N profile at m_1, g_1, m_2, g_2, m_3")
    pp.add_argument("--N", help="comma-separated N values")
    _add_common(pp)

    pd = sp.add_parser("freeze-diag", help="freeze-window and event diagnostics")
    pd.add_argument("--N", help="comma-separated N values")
    pd.add_argument("--level", type=int, help="scale index k (geometry at m_k)")
    pd.add_argument("--p1", type=float, help="override window p1 (skip the solver)")
    pd.add_argument("--p2", type=float, help="override window p2")
    _add_common(pd)

    pe = sp.add_parser("estimate", help="single estimator call, JSON to stdout")
    pe.add_argument("what", choices=["pi", "theta", "L", "F", "crossing", "selfdual"])
    pe.add_argument("--n", type=int)
    pe.add_argument("--p", type=float)
    pe.add_argument("--threshold", type=int, help="volume threshold N (for F)")
    _add_common(pe)
    return ap


def _base_config(args, name: str) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    items = {"name": name}
    if getattr(args, "N", None):
        items["Ns"] = str(args.N)
    if getattr(args, "C", None):
        items["C_grid"] = str(args.C)
    if args.seed is not None:
        items["master_seed"] = args.seed
    if args.trials is not None:
        items["trials"] = args.trials
    if args.workers is not None:
        items["workers"] = args.workers
    if args.out:
        items["out_dir"] = args.out
    if getattr(args, "level", None) is not None:
        items["level"] = args.level
    if getattr(args, "p1", None) is not None:
        items["p1_override"] = args.p1
    if getattr(args, "p2", None) is not None:
        items["p2_override"] = args.p2
    merged = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    merged.update(items)
    return parse_config_items(merged)


def _cmd_prop1(args) -> int:
    rows, points = run_prop1_profile(_base_config(args, "prop1"))
    print(json.dumps({"rows": len(rows), "points": points[:4],
                      "out": args.out or None}, indent=2))
    return 0


def _cmd_profile(args) -> int:
    rows, points = run_scale_profile(_base_config(args, "profile"))
    print(json.dumps(points, indent=2))
    return 0


def _cmd_freeze_diag(args) -> int:
    rows, points = run_freeze_diagnostics(_base_config(args, "freeze-diag"))
    print(json.dumps(points, indent=2))
    return 0


def _cmd_scales(args) -> int:
    seed = args.seed if args.seed is not None else 0
    table = compute_scales(args.N, args.depth, "exact1" if args.exact_pi1 else "mc",
                           seed, args.pi_stderr, workers=args.workers)
    payload = {
        "N": table.N, "depth": table.depth, "master_seed": seed,
        "scales": table.scales, "levels": table.rows(),
    }
    if table.depth >= 2:
        payload["bounds"] = check_scale_bounds(table)
        payload["plateau"] = check_volume_plateau(table, workers=args.workers)
    print(json.dumps(payload, indent=2))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "scales.json").write_text(json.dumps(payload, indent=2) + "\n")
        lines = ["k,m_k,pi_hat,pi_stderr,m_lo,m_hi"]
        for row in table.rows():
            lines.append(f"{row['k']},{row['m_k']},{row['pi_hat']:.12g},"
                         f"{row['pi_stderr']:.12g},{row['m_lo']},{row['m_hi']}")
        (out / "scales.csv").write_text("\n".join(lines) + "\n")
    return 0


def _cmd_estimate(args) -> int:
    seed = args.seed if args.seed is not None else 0
    trials = args.trials if args.trials is not None else 10000
    w = args.workers
    if args.what == "pi":
        est = estimate_pi(_req(args, "n"), trials, seed, w)
    elif args.what == "theta":
        n = args.n if args.n is not None else theta_proxy_box(_req(args, "p"), seed)
        est = estimate_theta(_req(args, "p"), n, trials, seed, w)
    elif args.what == "L":
        est = estimate_L(_req(args, "p"), seed, workers=w)
    elif args.what == "F":
        est = estimate_F(_req(args, "threshold"), _req(args, "n"), trials, seed, w)
    elif args.what == "crossing":
        est = estimate_crossing(_req(args, "p"), _req(args, "n"), trials, seed, w)
    else:
        est = estimate_selfdual_crossing(_req(args, "n"), trials, seed, w)
    print(json.dumps(est.record(), indent=2))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"estimate_{args.what}.json").write_text(json.dumps(est.record(), indent=2) + "\n")
    return 0


def _req(args, name: str):
    v = getattr(args, name)
    if v is None:
        raise ConfigError(f"--{name} is required for this estimator")
    return v


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "prop1": _cmd_prop1,
        "scales": _cmd_scales,
        "profile": _cmd_profile,
        "freeze-diag": _cmd_freeze_diag,
        "estimate": _cmd_estimate,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, LatticeError, ScaleError, EstimatorError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (WindowUnreachableError, RuntimeError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
