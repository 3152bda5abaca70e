"""Command-line driver: run experiments, verify, benchmark.

Exit codes: 0 success, 1 runtime or check failure, 2 config errors.
``ELEMENT_OUTPUT_DIR`` overrides the config's output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .agents import run_element
from .bench import bench_csv, run_bench
from .config import load_config
from .errors import ConfigError, ElementError
from .knn_graph import graph_save
from .metrics import emit_csv, emit_heatmap
from .verify import run_all_checks

__all__ = ["main", "cmd_run", "cmd_verify", "cmd_bench"]


def cmd_run(config_path: str) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        out_root = cfg.resolved_output_dir()
        params = cfg.run_params()
        for seed in cfg.seeds:
            out_dir = out_root if len(cfg.seeds) == 1 else out_root / f"seed_{seed}"
            out_dir.mkdir(parents=True, exist_ok=True)
            env = cfg.make_env()
            encoder = cfg.make_encoder()
            log = run_element(env, encoder, params, seed)
            emit_csv(log, out_dir / "run.csv")
            if log.coverage_grid is not None:
                emit_heatmap(log.coverage_grid, out_dir / "coverage.pgm")
            for episode, grid in sorted(log.reward_snapshots.items()):
                emit_heatmap(grid, out_dir / f"reward_ep{episode}.pgm")
            (out_dir / "graph.knng").write_bytes(graph_save(log.graph))
            last = log.records[-1]
            print(f"seed {seed}: {last.episode + 1} episodes, "
                  f"{last.steps} steps, {last.unique_cells} unique cells, "
                  f"graph size {last.graph_size} -> {out_dir}")
        return 0
    except (ElementError, OSError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


def cmd_verify(inject_fault: str | None = None) -> int:
    results = run_all_checks(inject_fault=inject_fault)
    width = max(len(r.name) for r in results)
    failed = False
    for r in results:
        if r.gating:
            status = "PASS" if r.passed else "FAIL"
            failed |= not r.passed
        else:
            status = "INFO"
        print(f"{status}  {r.name:<{width}}  {r.detail}")
    return 1 if failed else 0


def cmd_bench(n_points: int, dim: int, k: int, r1: int, r2: int,
              out: str | None = None) -> int:
    if n_points < 1000:
        print("error: --n must be at least 1000", file=sys.stderr)
        return 2
    results = run_bench(n_points, dim, k, r1, r2)
    header = (f"{'N':>8} {'graph ms/q':>11} {'brute ms/q':>11} {'speedup':>8} "
              f"{'touched<=':>10} {'recall':>7}")
    print(header)
    for r in results:
        print(f"{r.n_points:>8} {r.graph_ms_per_query:>11.4f} "
              f"{r.brute_ms_per_query:>11.4f} {r.speedup:>8.1f} "
              f"{r.touched_max:>4}/{r.touched_bound:<5} {r.recall:>7.3f}")
    if out is not None:
        bench_csv(results, out)
        print(f"wrote {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="element",
        description="Intrinsic-reward exploration experiments: episodic "
                    "state entropy plus kNN-graph lifelong novelty.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a YAML config")
    p_run.add_argument("config", help="path to the experiment config")

    p_verify = sub.add_parser("verify", help="run the self-check suites")
    p_verify.add_argument("--inject-fault", default=None,
                          choices=["eq12-denominator"],
                          help="test hook: corrupt a check to prove it can fail")

    p_bench = sub.add_parser("bench", help="graph vs brute-force reward benchmark")
    p_bench.add_argument("--n", type=int, required=True, help="max store size")
    p_bench.add_argument("--dim", type=int, default=8)
    p_bench.add_argument("--k", type=int, default=3)
    p_bench.add_argument("--r1", type=int, default=20)
    p_bench.add_argument("--r2", type=int, default=20)
    p_bench.add_argument("--out", default=None, help="also write a CSV here")

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "verify":
        return cmd_verify(inject_fault=args.inject_fault)
    return cmd_bench(args.n, args.dim, args.k, args.r1, args.r2, args.out)


if __name__ == "__main__":
    sys.exit(main())
