"""Solution-count statistics for the four minimal configurations.

Usage: python scripts/solution_counts.py [--trials 1000] [--workers 1] [--out DIR]
Writes one CSV per configuration (when --out is given) and prints a summary.
"""

import argparse
from pathlib import Path

from mom import bench
from mom.reduction import MinimalConfig


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for per-configuration CSVs")
    args = p.parse_args()

    print(f"{'config':8} {'total':>6} {'frac':>6} {'real min/avg/max':>18} "
          f"{'ref':>12} {'time s':>8} {'ref s':>6}")
    for cfg in MinimalConfig:
        spec = bench.ExperimentSpec(bench.ExperimentKind.SOLUTION_COUNT, cfg.label,
                                    trials=args.trials, seed=args.seed, workers=args.workers)
        rep = bench.run_solution_count(spec)
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            bench.emit_report(rep, "csv", out / f"counts_{cfg.label}.csv", echo=False)
        a = rep.aggregates
        real = f"{a['real_min']}/{a['real_avg']:.2f}/{a['real_max']}"
        ref = f"{cfg.real_min}/{cfg.real_avg}/{cfg.real_max}"
        print(f"{cfg.label:8} {a['total_mode']:>6} {a['total_mode_fraction']:>6.2f} {real:>18} "
              f"{ref:>12} {a['mean_time_s']:>8.3f} {cfg.reference_time:>6}")


if __name__ == "__main__":
    main()
