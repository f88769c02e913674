"""Median relative error versus noise level for the subminimal solvers.

Usage: python scripts/noise_sweep.py [--trials 100] [--config 3r4s2d ...] [--out DIR]
"""

import argparse
from pathlib import Path

from mom import bench
from mom.solvers import SubminimalConfig


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", nargs="*", default=[c.label for c in SubminimalConfig])
    p.add_argument("--out", help="directory for per-configuration CSVs")
    args = p.parse_args()

    for label in args.config:
        spec = bench.ExperimentSpec(bench.ExperimentKind.NOISE_SWEEP, label, trials=args.trials,
                                    seed=args.seed, workers=args.workers)
        rep = bench.run_noise_sweep(spec)
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            bench.emit_report(rep, "csv", out / f"noise_{label}.csv", echo=False)
        print(label)
        for row in rep.aggregates["per_sigma"]:
            med = row["median_rel_error"]
            med = "nan" if med is None else f"{med:.3e}"
            print(f"  sigma {row['sigma']:.1e}  median rel error {med}  "
                  f"failures {row['failure_rate']:.1%}")


if __name__ == "__main__":
    main()
