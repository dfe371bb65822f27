"""Command line entry point: ``uqscale {sensitivity,ld-study,scale-opt,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import load_config
from .errors import ConfigError, UQScaleError

log = logging.getLogger("uqscale")

EXIT_OK = 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uqscale", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("sensitivity", "Saltelli sampling, Sobol' indices and surrogate comparison"),
        ("ld-study", "L/D variability across aerostructural model structures"),
        ("scale-opt", "sub-scale experiment design by similitude optimization"),
        ("report", "consolidate stage outputs into report.md"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, required=name != "report",
                       help="pipeline YAML config")
        p.add_argument("--out", type=Path, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--threads", type=int, help="worker threads for model evaluation")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = None
    if args.config is not None:
        cfg = load_config(args.config, seed=args.seed, threads=args.threads)
    out = args.out or Path(cfg.output_dir if cfg else ".")

    if args.command == "report":
        if not out.is_dir():
            raise ConfigError(f"output directory {out} does not exist")
        rec, missing = pipeline.run_report(out, cfg)
        rec.append_to(out)
        if missing:
            raise ConfigError("missing artifacts: " + ", ".join(missing))
        print(out / "report.md")
        return EXIT_OK

    out.mkdir(parents=True, exist_ok=True)
    stage = {
        "sensitivity": pipeline.run_sensitivity,
        "ld-study": pipeline.run_ld_study,
        "scale-opt": pipeline.run_scale_opt,
    }[args.command]
    rec = stage(cfg, out)
    rec.append_to(out)
    for item in rec.manifest:
        print(out / item["file"])
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return run(argv)
    except UQScaleError as exc:
        log.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
