"""Command-line entry point: ``drcbf {simulate,montecarlo,margins,reach,constants}``."""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .harness import (FILTER_KINDS, ConfigError, episode_summary_dict, load_config, margin_sweep, monte_carlo,
                      run_episode, write_json, write_table_csv, write_trajectory_csv)
from .margins import estimate_constants
from .dynamics import BoxSet


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="scenario TOML (default: bundled scenario)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--filter", choices=FILTER_KINDS, default=None, help="safety filter kind")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drcbf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one episode; write trajectory.csv and summary.json")
    _common(p)

    p = sub.add_parser("montecarlo", help="run many episodes; write stats.json and min_h.csv")
    _common(p)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("margins", help="reach margin versus sampling time; write margins.csv")
    _common(p)

    p = sub.add_parser("reach", help="per-step reach boxes of one episode; write reach.csv")
    _common(p)

    p = sub.add_parser("constants", help="estimate Lipschitz constants; write constants.json")
    _common(p)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--safety-factor", type=float, default=1.2)
    return parser


def _scenario(args):
    sc = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.filter is not None:
        changes["filter"] = args.filter
    return sc.replace(**changes) if changes else sc


def _simulate(args) -> None:
    sc = _scenario(args)
    traj = run_episode(sc)
    write_trajectory_csv(traj, args.out / "trajectory.csv")
    write_json(args.out / "summary.json", episode_summary_dict(traj, sc))
    print(f"min h = {traj.min_h:.6g}, modes = {traj.mode_counts()}")


def _montecarlo(args) -> None:
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    sc = _scenario(args)
    stats = monte_carlo(sc, args.runs, workers=args.workers)
    write_json(args.out / "stats.json", stats.to_dict())
    write_table_csv(args.out / "min_h.csv", ("seed", "min_h", "final_distance_to_goal"),
                    ((e.seed, e.min_h, e.final_dist) for e in stats.episodes))
    d = stats.to_dict()
    print(f"runs={d['runs']} min={d['min']:.6g} max={d['max']:.6g} mean={d['mean']:.6g} "
          f"collisions={d['collisions']}")


def _margins(args) -> None:
    sc = _scenario(args)
    rows = margin_sweep(sc)
    write_table_csv(args.out / "margins.csv", ("t", "margin"), rows)
    for t, m in rows:
        print(f"{t:.2f}  {m:.6g}")


def _reach(args) -> None:
    sc = _scenario(args)
    traj = run_episode(sc)
    names = ("x", "y", "theta", "v")
    header = ["t"] + [f"box_{n}{s}" for n in names for s in ("lo", "hi")]
    rows = []
    for k in range(traj.n_records - 1):
        row = [traj.t[k]]
        for lo, hi in zip(traj.box_lo[k], traj.box_hi[k]):
            row += [lo, hi]
        rows.append(row)
    write_table_csv(args.out / "reach.csv", header, rows)
    print(f"{len(rows)} boxes, tube violations = {traj.tube_violations}")


def _constants(args) -> None:
    sc = _scenario(args)
    sys_ = sc.make_system()
    base = sc.estimates.meta if sc.estimates is not None else {}
    if "domain_lo" in base:
        domain = BoxSet(base["domain_lo"], base["domain_hi"])
    else:
        domain = BoxSet([0.0, 0.0, -math.pi, -0.5], [50.0, 50.0, math.pi, 2.5])
    est = estimate_constants(sys_, sc.make_chain(), domain, sc.input_box, samples=args.samples,
                             safety_factor=args.safety_factor, seed=sc.seed)
    est.save(args.out / "constants.json")
    print(", ".join(f"{k}={v:.6g}" for k, v in est.to_dict().items() if k != "meta"))


COMMANDS = {
    "simulate": _simulate,
    "montecarlo": _montecarlo,
    "margins": _margins,
    "reach": _reach,
    "constants": _constants,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"drcbf: config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
