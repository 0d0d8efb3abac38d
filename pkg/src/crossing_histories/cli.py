"""Command-line driver.

Exit codes: 0 success, 2 validation error, 3 regime violation under --strict,
4 acceptance failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
import warnings
from pathlib import Path

from .config import PIPELINES, ConfigError, load_config
from .errors import DomainError, RegimeError, RegimeWarning
from .results import PLOT_KINDS, emit, emit_plot_script

OUT_ENV = "CROSSING_HISTORIES_OUT"

EXIT_OK, EXIT_VALIDATION, EXIT_REGIME, EXIT_ACCEPTANCE = 0, 2, 3, 4

log = logging.getLogger("crossing_histories")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crossing-histories", description="Crossing probabilities from decoherent histories.")
    ap.add_argument("--pipeline", choices=PIPELINES, help="pipeline to run (overrides the config file)")
    ap.add_argument("--config", help="flat key = value scenario file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key (repeatable)")
    ap.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    ap.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./results)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--plot", choices=PLOT_KINDS, help="also write a matplotlib script of this kind")
    ap.add_argument("--strict", action="store_true", help="treat regime warnings as errors (exit 3)")
    ap.add_argument("--acceptance", action="store_true", help="run the acceptance suite (same as --pipeline acceptance)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def output_dir(flag) -> Path:
    return Path(flag or os.environ.get(OUT_ENV) or "results")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    pipeline = "acceptance" if args.acceptance else args.pipeline
    try:
        config = load_config(args.config, args.set, pipeline=pipeline, seed=args.seed)
        if args.plot and args.format != "csv":
            raise ConfigError("--plot needs --format csv (the script reads the CSV)", ["plot", "format"])
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    from .pipelines import run_scenario

    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings():
            if args.strict:
                warnings.simplefilter("error", RegimeWarning)
            if config.pipeline == "acceptance":
                table = _run_acceptance(config)
            else:
                table = run_scenario(config, strict=args.strict)
    except (RegimeError, RegimeWarning) as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    runtime = time.perf_counter() - t0

    out = output_dir(args.out)
    name = config.out_name or config.pipeline
    path = emit(table, args.format, out / f"{name}.{args.format}")
    print(f"wrote {path}", file=sys.stderr)
    if args.plot:
        script = emit_plot_script(table, args.plot, out / f"{name}_{args.plot}.py", path.name)
        print(f"wrote {script}", file=sys.stderr)
    print(f"runtime {runtime:.2f} s", file=sys.stderr)
    if config.pipeline == "acceptance" and not all(table.columns["passed"]):
        return EXIT_ACCEPTANCE
    return EXIT_OK


def _run_acceptance(config):
    from .acceptance import report_table, run_acceptance
    from .pipelines import base_meta

    results = run_acceptance(config.criteria or None, config.perturb_hbar, echo=print)
    failed = [r.id for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    return report_table(results, base_meta(config))


if __name__ == "__main__":
    sys.exit(main())
