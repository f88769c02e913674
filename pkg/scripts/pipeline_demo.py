"""End-to-end pipeline on a synthetic room scene.

Generates 12 receivers and 151 transmitters inside a 4.0 x 4.6 x 1.5 box, adds
Gaussian pseudorange noise, writes the CSV, solves it and reports the mean
receiver error.

Usage: python scripts/pipeline_demo.py [--sigma-rel 1e-2] [--workdir DIR]
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from mom import bench
from mom.formats import pseudoranges_to_csv, save_instance
from mom.network import add_noise, synthesize_pseudoranges


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("-m", type=int, default=12)
    p.add_argument("-n", type=int, default=151)
    p.add_argument("--sigma-rel", type=float, default=1e-2,
                   help="noise standard deviation as a fraction of the room diagonal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workdir")
    args = p.parse_args()

    room = np.array(bench.ROOM)
    diag = float(np.linalg.norm(room))
    rng = np.random.default_rng(args.seed)
    inst = bench.room_instance(args.m, args.n, room, rng=rng)
    f = add_noise(synthesize_pseudoranges(inst), args.sigma_rel * diag, rng=rng)

    workdir = Path(args.workdir or tempfile.mkdtemp(prefix="mom_"))
    workdir.mkdir(parents=True, exist_ok=True)
    csv_path, truth_path = workdir / "pseudoranges.csv", workdir / "truth.json"
    csv_path.write_text(pseudoranges_to_csv(f))
    save_instance(inst, truth_path)

    rep = bench.run_pipeline(csv_path, truth_path)
    a = rep.aggregates
    print(f"files in {workdir}")
    for key in sorted(a):
        print(f"  {key}: {a[key]}")
    if "mean_receiver_error" in a:
        print(f"mean receiver error / diagonal = {a['mean_receiver_error'] / diag:.4f}")


if __name__ == "__main__":
    main()
