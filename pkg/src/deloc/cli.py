"""Command-line entry point: one subcommand per experiment."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import COMMANDS, ExperimentConfig, hard_failures, run, write_report
from .graph_core import GraphError


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deloc", description="Delocalization experiments on graph eigenvectors.")
    p.add_argument("command", nargs="?", choices=sorted(COMMANDS), help="experiment to run")
    p.add_argument("--config", help="replay a config JSON (other flags are ignored)")
    p.add_argument("--graph", help="graph spec, e.g. cycle:100, complete:50, hypercube:5, edges:FILE, group:FILE")
    p.add_argument("--graph2", help="second factor for the product command")
    p.add_argument("--rule", default="cartesian", help="product rule name or code 0..255")
    p.add_argument("--base", help="base graph spec for lifts")
    p.add_argument("--n", type=_int_list, default=[], help="comma-separated lift orders")
    p.add_argument("--window", help="a:b for an interval, idx:i,j or idx:i-j for eigenvalue indices")
    p.add_argument("--q", type=float, default=4.0)
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report path (JSON); CSV tables are written next to it")
    p.add_argument("--m", type=_int_list, help="eigenspace multiplicities for the gaussian command")
    p.add_argument("--grid", type=int, help="number of test-function centres on [-4, 4] (gaussian)")
    p.add_argument("--t", type=float, help="deviation parameter (qe)")
    p.add_argument("--parts", type=int, help="number of partition blocks (qe)")
    p.add_argument("--counts", type=_int_list, help="window sizes N(I) (deloc)")
    p.add_argument("--size", type=int, help="random matrix order (deloc)")
    p.add_argument("--save-config", help="also write the resolved config JSON here")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        return ExperimentConfig.from_json(Path(args.config).read_text())
    if not args.command:
        raise SystemExit("a command or --config is required")
    extra = {k: getattr(args, k) for k in ("m", "grid", "t", "parts", "counts", "size") if getattr(args, k) is not None}
    return ExperimentConfig(
        command=args.command, graph=args.graph, graph2=args.graph2, rule=args.rule, base=args.base, n=args.n,
        window=args.window, q=args.q, lam=args.lam, trials=args.trials, seed=args.seed, out=args.out, extra=extra,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    if args.save_config:
        Path(args.save_config).write_text(cfg.to_json() + "\n")
    try:
        report = run(cfg)
    except (GraphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = write_report(report, cfg.out)
    if not cfg.out:
        print(text)
    for c in report["claims"]:
        status = "ok  " if c["pass"] else ("FAIL" if c["hard"] else "soft")
        print(f"[{status}] {c['name']}: {c['lhs']:.6g} vs {c['rhs']:.6g}", file=sys.stderr)
    return 1 if hard_failures(report) else 0


if __name__ == "__main__":
    sys.exit(main())
