"""Command-line entry point: ``evoqml {run,compare,probe-plateau,gen-adhoc}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .datasets import DatasetError, adhoc_generate, write_dataset_csv
from .experiment import (
    ConfigError,
    compare_models,
    format_table,
    load_config,
    log_variance_slope,
    plateau_csv,
    probe_plateau,
    run_experiment,
    write_atomic,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DATA = 4
EXIT_RUNTIME = 5


def _external(values: list[str]) -> dict[str, float]:
    out = {}
    for item in values or []:
        name, sep, acc = item.partition("=")
        if not sep or not name:
            raise ConfigError("--external", f"expected NAME=ACCURACY, got {item!r}")
        try:
            out[name] = float(acc)
        except ValueError:
            raise ConfigError(f"--external.{name}", f"not a number: {acc!r}") from None
    return out


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    summary = run_experiment(cfg, args.output_dir, jobs=args.jobs)
    s = summary.as_dict()
    print(f"{cfg.name}: test acc {s['test_acc_mean']:.4f} +/- {s['test_acc_std']:.4f} "
          f"over {s['repetitions']} runs -> {summary.output_dir}")
    return EXIT_OK


def cmd_compare(args) -> int:
    configs = [load_config(p) for p in args.configs]
    rows = compare_models(configs, args.output_dir, _external(args.external), jobs=args.jobs)
    print(format_table(rows), end="")
    return EXIT_OK


def cmd_probe(args) -> int:
    n_list = [int(v) for v in args.n_list.replace(",", " ").split()]
    rows = probe_plateau(n_list, args.layers, args.samples, args.seed, args.observable)
    text = plateau_csv(rows, args.layers, args.samples, args.observable)
    if args.output:
        write_atomic(Path(args.output), text)
    else:
        sys.stdout.write(text)
    if len(rows) > 1:
        print(f"log-variance slope: {log_variance_slope(rows):.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_gen_adhoc(args) -> int:
    data, meta = adhoc_generate(args.n_dim, args.gap, args.per_class, args.seed, args.v_seed, args.grid)
    out = Path(args.output)
    write_dataset_csv(data, out)
    write_atomic(out.with_suffix(".meta.json"), json.dumps(meta.as_dict(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(data)} samples to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evoqml", description="Evolutionary and variational quantum classifiers.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the repetitions of one experiment config")
    r.add_argument("config")
    r.add_argument("--output-dir", default=None, help="override output_dir from the config")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run several configs on identical splits and tabulate test accuracy")
    c.add_argument("configs", nargs="+")
    c.add_argument("--output-dir", required=True)
    c.add_argument("--external", action="append", metavar="NAME=ACC",
                   help="externally computed accuracy (e.g. a classical SVC) to list alongside")
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_compare)

    b = sub.add_parser("probe-plateau", help="gradient variance of the layered ansatz versus qubit count")
    b.add_argument("--n-list", default="2,4,6,8")
    b.add_argument("--layers", type=int, default=4)
    b.add_argument("--samples", type=int, default=200)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--observable", choices=("global", "local"), default="global")
    b.add_argument("--output", default=None, help="CSV path (default: stdout)")
    b.set_defaults(func=cmd_probe)

    g = sub.add_parser("gen-adhoc", help="generate an ad-hoc dataset CSV with a metadata sidecar")
    g.add_argument("--n-dim", type=int, choices=(2, 3), default=2)
    g.add_argument("--gap", type=float, default=0.3)
    g.add_argument("--per-class", type=int, default=30)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--v-seed", type=int, default=None)
    g.add_argument("--grid", type=int, default=None)
    g.add_argument("--output", required=True)
    g.set_defaults(func=cmd_gen_adhoc)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
