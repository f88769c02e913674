"""Command-line entry point (``mom``)."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .errors import MomError, ParameterError, ParseError, SolveFailed
from .formats import (
    instance_to_json,
    load_pseudoranges,
    pseudoranges_to_csv,
    save_instance,
    solution_to_json,
)
from .homotopy import TrackerConfig
from .network import (
    Determinacy,
    add_noise,
    classify,
    random_instance,
    synthesize_pseudoranges,
)
from .reduction import MinimalConfig
from .solvers import (
    PipelineOptions,
    SubminimalConfig,
    solve_minimal,
    solve_overdetermined,
    solve_subminimal,
)


def _sigma_grid(text: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sigma grid {text!r}") from None
    if not grid:
        raise argparse.ArgumentTypeError("sigma grid is empty")
    return grid


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def cmd_classify(args) -> int:
    cls = classify(args.m, args.n, args.K)
    print(json.dumps({"m": args.m, "n": args.n, "dim": args.K,
                      "excess": cls.excess, "kind": cls.kind.value}))
    return 0


def _node_counts(args) -> tuple[int, int, int]:
    if args.config:
        label = args.config.lower()
        for enum_cls in (MinimalConfig, SubminimalConfig):
            for c in enum_cls:
                if c.label == label:
                    return c.m, c.n, c.dim
        raise ParameterError(f"unknown configuration {args.config!r}")
    if args.m is None or args.n is None:
        raise ParameterError("give --config or both -m and -n")
    return args.m, args.n, args.dim


def cmd_generate(args) -> int:
    m, n, dim = _node_counts(args)
    rng = np.random.default_rng(args.seed)
    if args.room:
        inst = bench.room_instance(m, n, bench.ROOM[:dim], rng=rng)
    else:
        inst = random_instance(m, n, dim, rng=rng)
    f = add_noise(synthesize_pseudoranges(inst), args.sigma, rng=rng)
    if args.truth:
        save_instance(inst, args.truth)
    _write(pseudoranges_to_csv(f), args.out)
    return 0


def cmd_solve(args) -> int:
    f = load_pseudoranges(args.file)
    cfg = TrackerConfig(seed=args.seed)
    cls = classify(f.m, f.n, f.dim)
    if cls.kind is Determinacy.UNDERDETERMINED:
        raise ParameterError(f"{f.m}r/{f.n}s in {f.dim}D is underdetermined "
                             f"(excess constraint {cls.excess})")
    if cls.kind is Determinacy.MINIMAL:
        cands = solve_minimal(f, cfg=cfg)
        out = {
            "kind": "minimal",
            "total_solutions": len(cands.solutions.all_solutions),
            "path_stats": {k: int(v) for k, v in cands.solutions.path_stats.items()},
            "candidates": [solution_to_json(c, f.transmitters) for c in cands],
        }
    else:
        try:
            SubminimalConfig.for_counts(f.m, f.n, f.dim)
            sol = solve_subminimal(f, cfg)
            kind = "subminimal"
        except ParameterError:
            sol = solve_overdetermined(f, cfg, PipelineOptions(seed=args.seed))
            kind = "overdetermined"
        out = {"kind": kind, "solution": solution_to_json(sol, f.transmitters)}
    _write(_dump(out), args.out)
    return 0


def _emit(report, args) -> int:
    text = bench.emit_report(report, args.format, include_timing=not args.no_timing,
                             echo=args.out is not None)
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def cmd_bench_counts(args) -> int:
    spec = bench.ExperimentSpec(bench.ExperimentKind.SOLUTION_COUNT, args.config,
                                trials=args.trials, seed=args.seed, output=args.out,
                                workers=args.workers)
    return _emit(bench.run_solution_count(spec), args)


def cmd_bench_noise(args) -> int:
    kind = bench.ExperimentKind.CLEAN_ERROR if args.clean else bench.ExperimentKind.NOISE_SWEEP
    spec = bench.ExperimentSpec(kind, args.config, trials=args.trials,
                                sigma_grid=args.sigma_grid, seed=args.seed,
                                output=args.out, workers=args.workers)
    return _emit(bench.run_noise_sweep(spec), args)


def cmd_pipeline(args) -> int:
    report = bench.run_pipeline(args.file, args.truth, TrackerConfig(seed=args.seed),
                                PipelineOptions(restarts=args.restarts, seed=args.seed))
    return _emit(report, args)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mom", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="excess constraint of m receivers, n transmitters in K dims")
    c.add_argument("m", type=int)
    c.add_argument("n", type=int)
    c.add_argument("K", type=int)
    c.set_defaults(func=cmd_classify)

    g = sub.add_parser("generate", help="write a synthetic pseudorange CSV")
    g.add_argument("--config", help="node counts by label, e.g. 3r4s2d")
    g.add_argument("-m", type=int)
    g.add_argument("-n", type=int)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sigma", type=float, default=0.0)
    g.add_argument("--room", action="store_true", help="sample inside a 4.0 x 4.6 x 1.5 box")
    g.add_argument("--truth", help="also write the ground-truth instance JSON here")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve a pseudorange CSV")
    s.add_argument("file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    def report_flags(q):
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--out")
        q.add_argument("--format", choices=("csv", "json"), default="csv")
        q.add_argument("--no-timing", action="store_true",
                       help="leave wall times out so output is byte-reproducible")

    b = sub.add_parser("bench", help="Monte-Carlo experiments")
    bsub = b.add_subparsers(dest="experiment", required=True)
    bc = bsub.add_parser("counts", help="solution counts of a minimal solver")
    bc.add_argument("--config", default="3r3s2d", choices=[c.label for c in MinimalConfig])
    bc.add_argument("--trials", type=int, default=100)
    bc.add_argument("--workers", type=int, default=1)
    report_flags(bc)
    bc.set_defaults(func=cmd_bench_counts)

    bn = bsub.add_parser("noise", help="relative error of a subminimal solver versus noise")
    bn.add_argument("--config", default="3r4s2d", choices=[c.label for c in SubminimalConfig])
    bn.add_argument("--trials", type=int, default=100)
    bn.add_argument("--workers", type=int, default=1)
    bn.add_argument("--sigma-grid", type=_sigma_grid, default=bench.DEFAULT_SIGMA_GRID)
    bn.add_argument("--clean", action="store_true", help="noise-free run (sigma = 0)")
    report_flags(bn)
    bn.set_defaults(func=cmd_bench_noise)

    pl = sub.add_parser("pipeline", help="overdetermined solve of a pseudorange CSV")
    pl.add_argument("file")
    pl.add_argument("--truth", help="ground-truth instance JSON for error reporting")
    pl.add_argument("--restarts", type=int, default=5)
    report_flags(pl)
    pl.set_defaults(func=cmd_pipeline)
    return p


def _error_json(exc: BaseException) -> dict:
    out = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError) and exc.line is not None:
        out["line"] = exc.line
    if isinstance(exc, SolveFailed):
        out["attempts"] = exc.attempts
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (MomError, OSError) as exc:
        sys.stderr.write(json.dumps(_error_json(exc)) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
