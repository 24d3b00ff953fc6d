"""``mstlimit`` command line: one subcommand per experiment.

Exit status is 0 on success, 2 on a usage error and 3 when ``--check`` is given
and one of the experiment's checks fails.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import COMMANDS, ExperimentConfig, run_experiment

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 2, 3

_DEFAULT_REPS = {
    "theta-table": 200,
    "degree-dist": 10_000,
    "volume-growth": 500,
    "convergence": 10_000,
    "identities": 100_000,
    "forward-maximal-ks": 1000,
    "zprim-stats": 10_000,
    "hybrid-demo": 100,
}


def _common(p: argparse.ArgumentParser, reps: int):
    p.add_argument("--seed", type=int, default=0, help="master seed (nonnegative)")
    p.add_argument("--reps", type=int, default=reps, help=f"replicates (default {reps})")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default $MSTLIMIT_WORKERS or 1)")
    p.add_argument("--out", default=None, help="write OUT.csv and OUT.json")
    p.add_argument("--check", action="store_true", help="exit 3 if a check fails")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mstlimit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theta-table", help="theta, theta', dual on a grid (reps = grid points)")
    _common(p, _DEFAULT_REPS["theta-table"])

    p = sub.add_parser("degree-dist", help="root degree law")
    _common(p, _DEFAULT_REPS["degree-dist"])
    p.add_argument("--mode", choices=["limit-sum", "aldous", "finite-n"], default="limit-sum")
    p.add_argument("--n", type=int, default=10_000)

    p = sub.add_parser("volume-growth", help="mean ball sizes and fitted log-log slope")
    _common(p, _DEFAULT_REPS["volume-growth"])
    p.add_argument("--object", choices=["T", "M", "Kn-mst"], default="T")
    p.add_argument("--rmax", type=int, default=256)
    p.add_argument("--rmin", type=int, default=None)
    p.add_argument("--n", type=int, default=10_000)

    p = sub.add_parser("convergence", help="TV between Prim-prefix and T ball codes")
    _common(p, _DEFAULT_REPS["convergence"])
    p.add_argument("--n", type=int, nargs="+", default=[300, 3000, 30000])
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--delta", type=float, default=0.05, help="weight quantum; 'inf' compares shapes only")
    p.add_argument("--k", type=int, default=None, help="prefix length (default ceil(log^5 n), capped)")

    p = sub.add_parser("identities", help="closed-form checks")
    _common(p, _DEFAULT_REPS["identities"])
    p.add_argument("--which", choices=["zeta", "frieze", "nk-bracket"], default="zeta")
    p.add_argument("--n", type=int, default=10_000)

    p = sub.add_parser("forward-maximal-ks", help="law of the largest invaded weight and E g(2)")
    _common(p, _DEFAULT_REPS["forward-maximal-ks"])
    p.add_argument("--steps", type=int, default=100_000)

    p = sub.add_parser("zprim-stats", help="tau_u and lambda_u of z-Prim probes (reps = probes)")
    _common(p, _DEFAULT_REPS["zprim-stats"])
    p.add_argument("--n", type=int, default=20_000)
    p.add_argument("--z", type=float, default=1.2)
    p.add_argument("--k", type=int, default=None, help="prefix length (default ceil(log^3 n))")
    p.add_argument("--probes", type=int, default=100, help="probes per graph")

    p = sub.add_parser("hybrid-demo", help="M_n^{z,lambda} on random instances")
    _common(p, _DEFAULT_REPS["hybrid-demo"])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--z", type=float, default=1.2)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--tree-out", default=None, help="export the first instance's tree")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    kw = {"command": args.command, "seed": args.seed, "reps": args.reps, "workers": args.workers}
    for name in ("mode", "object", "which", "z", "lam", "k", "delta", "radius", "steps", "probes"):
        if hasattr(args, name):
            kw[name] = getattr(args, name)
    if hasattr(args, "rmax"):
        kw["r_max"], kw["r_min"] = args.rmax, args.rmin
    if hasattr(args, "n"):
        if isinstance(args.n, list):
            kw["ns"] = tuple(args.n)
        else:
            kw["n"] = args.n
    return ExperimentConfig(**kw)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        result = run_experiment(cfg)
        if getattr(args, "tree_out", None):
            _export_hybrid_tree(cfg, args.tree_out)
    except ValueError as exc:
        print(f"mstlimit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        result.write(cfg, args.out)
    print(json.dumps(result.summary(cfg), indent=2, sort_keys=True))
    if args.check and not result.passed:
        failed = [k for k, v in result.checks.items() if not v]
        print(f"mstlimit: checks failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _export_hybrid_tree(cfg: ExperimentConfig, path: str) -> None:
    from .complete_mst import ImplicitCompleteGraph, hybrid_construct
    from .experiments import replicate_rng

    g = ImplicitCompleteGraph(cfg.n, int(replicate_rng(cfg.seed, 0).integers(2**62)))
    tree = hybrid_construct(g, cfg.z, cfg.z if cfg.lam is None else cfg.lam, cfg.k)
    if tree is None:
        raise ValueError("first instance has g = 0; nothing to export")
    tree.write(path)


if __name__ == "__main__":
    sys.exit(main())
