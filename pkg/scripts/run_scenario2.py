"""Ad-hoc separation runs: count how many seeded runs reach perfect test accuracy.

    python3 scripts/run_scenario2.py --output-dir runs/scenario2
"""

import argparse
from pathlib import Path

from evoqml.experiment import load_config, run_experiment

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--output-dir", default="runs/scenario2")
    p.add_argument("--configs", nargs="+", default=["adhoc2_eqc", "adhoc2_vqc"])
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()
    for name in args.configs:
        cfg = load_config(CONFIGS / f"{name}.yaml")
        summary = run_experiment(cfg, Path(args.output_dir) / name, jobs=args.jobs)
        accs = summary.test_accuracies
        perfect = sum(a == 1.0 for a in accs)
        print(f"{name}: {perfect}/{len(accs)} runs at test accuracy 1.0 "
              f"({', '.join(f'{a:.2f}' for a in accs)})")


if __name__ == "__main__":
    main()
