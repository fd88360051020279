import argparse
import logging
import sys
from time import perf_counter

import pandas as pd

import report_engine
import sweep_engine
from gradlab import __version__
from gradlab.utils import DivergenceDetected, GradLabError
from gradlab.utils._oracles import run_oracle_suite

# --- CONFIGURATION ---
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger("Lab")

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_INVALID = 2
EXIT_DIVERGED = 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="KEY=VALUE config file")
    common.add_argument("--out", help="Output directory (run/sweep) or sweep directory (report)")
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--iters", type=int)
    training.add_argument("--seeds", help="Repeat seeds, e.g. 0,1,2")
    training.add_argument("--cadence", type=int, help="Snapshot every N iterations")

    parser = argparse.ArgumentParser(prog="run_lab", description="Multi-task optimization lab")
    parser.add_argument("--version", action="version", version=f"gradlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common, training], help="One method, every repeat seed")
    run.add_argument("--method")
    run.add_argument("--level", choices=["param", "feature"])

    sweep = sub.add_parser("sweep", parents=[common, training], help="Every applicable method x level cell")
    sweep.add_argument("--methods", help="Comma separated methods (default: full roster)")
    sweep.add_argument("--levels", help="Comma separated levels (default: param,feature)")
    sweep.add_argument("--jobs", type=int, help="Worker processes over cells")

    sub.add_parser("report", parents=[common], help="Ranking similarity report of a sweep")

    selftest = sub.add_parser("selftest", parents=[common], help="Run the oracle suite")
    selftest.add_argument("--instances", type=int, default=500)
    selftest.add_argument("--seed", type=int, default=0)
    return parser


def _load_config(args):
    flags = {k: v for k, v in vars(args).items() if k in sweep_engine.FLAG_KEYS}
    settings = sweep_engine.resolve_settings(args.config, flags)
    return sweep_engine.RunConfig.from_settings(settings)


# ==========================================================
# COMMANDS
# ==========================================================
def cmd_run(args) -> int:
    config = _load_config(args)
    summary = sweep_engine.run_cell(config)
    print(summary.to_string(index=False))
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args)
    out = sweep_engine.sweep(config)
    manifest = sweep_engine.read_manifest(out)
    print(manifest[["cell", "status"]].to_string(index=False))
    return EXIT_OK


def cmd_report(args) -> int:
    config = _load_config(args)
    table = report_engine.report(config.out)
    print(table.to_text(), end="")
    return EXIT_OK


def cmd_selftest(args) -> int:
    stime = perf_counter()
    results = run_oracle_suite(args.instances, args.seed)
    with pd.option_context("display.width", 160, "display.max_columns", None):
        print(results.to_string(index=False))
    failed = int(results["failed"].sum())
    logger.info(f"[i] Oracle suite: {failed} failure(s) in {perf_counter() - stime:.2f}s")
    return EXIT_SELFTEST if failed else EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "report": cmd_report,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        return COMMANDS[args.command](args)
    except DivergenceDetected as e:
        logger.critical(f"❌ {e}")
        return EXIT_DIVERGED
    except GradLabError as e:
        logger.error(f"❌ {e}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
