"""Gradient variance of the layered ansatz for global and local observables.

    python3 scripts/probe_plateau.py --output-dir runs/plateau
"""

import argparse
from pathlib import Path

from evoqml.experiment import log_variance_slope, plateau_csv, probe_plateau, write_atomic


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--output-dir", default="runs/plateau")
    p.add_argument("--n-list", default="2,4,6,8")
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    n_list = [int(v) for v in args.n_list.split(",")]
    for observable in ("global", "local"):
        rows = probe_plateau(n_list, args.layers, args.samples, args.seed, observable)
        write_atomic(Path(args.output_dir) / f"plateau_{observable}.csv",
                     plateau_csv(rows, args.layers, args.samples, observable))
        for n, var in rows:
            print(f"{observable:>6} n={n}: var={var:.3e}")
        print(f"{observable:>6} log-variance slope: {log_variance_slope(rows):.4f}")


if __name__ == "__main__":
    main()
