"""Command line: ``llmuno run CONFIG``, ``llmuno preset NAME``, ``llmuno report RUN_DIR``."""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import load_config, preset, presets, run_experiment
from .stats import RecordsError, summarize_run


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="llmuno", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by an INI config file")
    run.add_argument("config")
    run.add_argument("--out", help="override the config's out_dir")

    pre = sub.add_parser("preset", help="run a built-in experiment preset")
    pre.add_argument("name", choices=[c.name for c in presets()])
    pre.add_argument("--games", type=int)
    pre.add_argument("--seed", type=int)
    pre.add_argument("--out")
    pre.add_argument("--parallelism", type=int)
    pre.add_argument("--method", choices=("cloze", "counterfactual"),
                     help="prompting method for the preset's LLM seat")

    rep = sub.add_parser("report", help="summarize a finished run directory")
    rep.add_argument("run_dir")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "report":
        try:
            print(summarize_run(args.run_dir).to_text())
        except RecordsError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        return 0

    if args.command == "run":
        config = load_config(args.config)
        if args.out:
            config = config.replace(out_dir=args.out)
    else:
        changes = {}
        if args.games is not None:
            changes["games"] = args.games
        if args.seed is not None:
            changes["master_seed"] = args.seed
        if args.out is not None:
            changes["out_dir"] = args.out
        if args.parallelism is not None:
            changes["parallelism"] = args.parallelism
        config = preset(args.name, method=args.method, **changes)
    result = run_experiment(config)
    print(result.report.to_text())
    if config.out_dir:
        print(f"records written to {config.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
