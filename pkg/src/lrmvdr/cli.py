"""Command line entry point: ``mvdr <experiment> [options]``."""

import argparse
import json
import sys
from importlib import resources

from .config import EXPERIMENTS, load_experiment_config
from .experiments import run_experiment

_DEFAULT_CONFIGS = {
    "beampattern": "beampattern.json",
    "timing": "timing.json",
    "sinr-gain": "sinr_gain.json",
    "failure-mode": "failure_mode.json",
}


def default_config_path(experiment: str):
    """Path of the packaged stock config for an experiment."""
    return resources.files("lrmvdr.configs") / _DEFAULT_CONFIGS[experiment]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvdr",
        description="Run MVDR beamforming experiments (exact and low-rank engines).",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", default=None,
                       help="experiment config JSON (default: the packaged config)")
        p.add_argument("--out", default=None,
                       help="output directory (default: out/<experiment>)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--engine", choices=["exact", "lowrank", "both"], default=None,
                       help="restrict which engines run")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config_path = args.config or default_config_path(args.experiment)
    overrides = {"seed": args.seed}
    if args.engine and args.engine != "both":
        overrides["engines"] = [args.engine]
    cfg = load_experiment_config(config_path, overrides)
    if cfg.experiment != args.experiment:
        print(f"config is for {cfg.experiment!r}, not {args.experiment!r}", file=sys.stderr)
        return 2
    out_dir = args.out or f"out/{args.experiment}"
    summary = run_experiment(cfg, out_dir)
    print(f"wrote {args.experiment} outputs to {out_dir}")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
