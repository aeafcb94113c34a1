"""Command-line entry point.

Verbs map to harness stages:

    ingest    load + validate securities, write the quality report
    econ      ingest, then run the stationarity-test batch
    backtest  ingest, then walk-forward + trading for every run
    report    rebuild report/ summaries from an existing run directory
    all       everything above in order

``--out``, ``--seed`` and ``--jobs`` override the corresponding config
keys, which changes the run id exactly as editing the config would.
Exit codes: 0 every unit of work succeeded, 1 some failed, 2 all failed
or the config itself was unusable.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .harness import ConfigError, ExperimentConfig, emit_report, run_experiment

log = logging.getLogger(__name__)

VERB_STAGES = {
    "ingest": ("ingest",),
    "econ": ("ingest", "econ"),
    "backtest": ("ingest", "backtest"),
    "all": ("ingest", "econ", "backtest", "report"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emhlab",
        description="Market-efficiency laboratory: stationarity tests, "
                    "walk-forward classification, trading simulation.")
    parser.add_argument("--verbose", "-v", action="store_true",
                        help="debug-level logging")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in (
        ("ingest", "load and validate the configured securities"),
        ("econ", "run the stationarity-test batch"),
        ("backtest", "run walk-forward prediction and trading"),
        ("report", "rebuild summaries for an existing run"),
        ("all", "ingest, econ, backtest and report in one go"),
    ):
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("--config", "-c", required=True, help="path to the config file")
        p.add_argument("--out", help="override out_dir")
        p.add_argument("--seed", type=int, help="override the global seed")
        p.add_argument("--jobs", type=int, help="override parallelism (0 = all cores)")
    return parser


def _overrides(args) -> dict:
    out = {}
    if args.out is not None:
        out["out_dir"] = args.out
    if args.seed is not None:
        out["seed"] = args.seed
    if args.jobs is not None:
        out["jobs"] = args.jobs
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        config = ExperimentConfig.from_file(args.config, overrides=_overrides(args))
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2

    try:
        if args.verb == "report":
            run_dir = os.path.join(config.out_dir, f"run_{config.run_id()}")
            written = emit_report(run_dir)
            log.info("report: wrote %d files under %s", len(written), run_dir)
            return 0
        master = run_experiment(config, stages=VERB_STAGES[args.verb])
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    log.info("artifacts under %s", master.run_dir)
    return master.exit_code()


if __name__ == "__main__":
    sys.exit(main())
