"""Command line entry point: ``collapse-lab <model> --config FILE ...``."""

from __future__ import annotations

import argparse
import sys

from .config import MODELS, build, load_file, merge, validate
from .errors import ConfigError
from .experiments import IoError, run

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="collapse-lab",
        description="Seeded experiments on true and false collapse toy models.",
    )
    ap.add_argument("model", choices=MODELS)
    ap.add_argument("--config", help="JSON config file; flags override its fields")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trials", type=int, dest="n_trials")
    ap.add_argument("--out", dest="output_dir")
    ap.add_argument("--validate", action="store_true",
                    help="only check the config and list diagnostics")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        file_cfg = load_file(args.config) if args.config else {}
        cfg = merge(file_cfg, {"model": args.model, "seed": args.seed,
                               "n_trials": args.n_trials, "output_dir": args.output_dir})
        diags = validate(cfg)
        if diags:
            for d in diags:
                print(f"config error: {d}", file=sys.stderr)
            return EXIT_CONFIG
        if args.validate:
            print("config ok")
            return EXIT_OK
        config = build(cfg)
        report = run(config)
        report.write(config.output_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IoError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {config.output_dir}/summary.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
