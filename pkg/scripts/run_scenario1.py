"""Iris comparison: evolved vs variational classifier on identical stratified splits.

    python3 scripts/run_scenario1.py --output-dir runs/scenario1 [--external svc=0.95]
"""

import argparse
from pathlib import Path

from evoqml.experiment import compare_models, format_table, load_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--output-dir", default="runs/scenario1")
    p.add_argument("--external", action="append", default=[], metavar="NAME=ACC")
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()
    external = {k: float(v) for k, v in (item.split("=", 1) for item in args.external)}
    configs = [load_config(CONFIGS / "iris_eqc.yaml"), load_config(CONFIGS / "iris_vqc.yaml")]
    rows = compare_models(configs, args.output_dir, external, jobs=args.jobs)
    print(format_table(rows), end="")


if __name__ == "__main__":
    main()
