"""Command-line front end: seeded experiment runs and cross-run aggregation.

``lrtrpo run`` trains one seed after another (or in parallel processes),
writing per-seed episode-return CSVs, per-iteration diagnostics, a summary
JSON, and a median-return figure. ``lrtrpo aggregate`` merges finished runs
into a median/quartile curve CSV plus its rendered figure.

Set LRTRPO_LOG=DEBUG (or any logging level name) for more chatter.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

from .config import ExperimentConfig, PRESETS, load_config, preset_config
from .errors import ConfigError, DivergenceError
from .plotting import plot_median_curve
from .reporting import (
    AggregationError,
    aggregate_runs,
    median_curve,
    write_diagnostics_jsonl,
    write_median_csv,
    write_returns_csv,
    write_summary_json,
)
from .trainer import Trainer

logger = logging.getLogger("lrtrpo")

FULL_SCALE_SEED_COUNT = 100  # --full-scale: simulation count used at scale


def run_seed(config: ExperimentConfig, seed: int, out_dir) -> tuple:
    """Train one seed and persist its outputs (partial ones on divergence)."""
    trainer = Trainer(config, seed)
    seed_dir = Path(out_dir) / f"seed_{seed}"
    try:
        trainer.run()
    finally:
        write_returns_csv(seed_dir / "returns.csv", seed,
                          trainer.history.episode_returns)
        write_diagnostics_jsonl(seed_dir / "diagnostics.jsonl", trainer.history)
    return seed, trainer.history.episode_returns, trainer.param_counts()


def run_experiment(config: ExperimentConfig, threads: int = 1,
                   force: bool = False, plot: bool = True) -> Path:
    """Run every configured seed; returns the summary JSON path."""
    out_dir = Path(config.out_dir)
    if out_dir.exists() and any(out_dir.iterdir()) and not force:
        raise ConfigError(
            f"output directory {out_dir} is not empty; pass --force to reuse it")
    out_dir.mkdir(parents=True, exist_ok=True)

    per_seed, param_counts = {}, None
    if threads <= 1:
        for seed in config.seeds:
            logger.info("running seed %d", seed)
            seed_, returns, param_counts = run_seed(config, seed, out_dir)
            per_seed[seed_] = returns
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(run_seed, config, seed, out_dir): seed
                       for seed in config.seeds}
            for fut in as_completed(futures):
                seed_, returns, param_counts = fut.result()
                logger.info("finished seed %d", seed_)
                per_seed[seed_] = returns

    summary_path = out_dir / "summary.json"
    write_summary_json(summary_path, config, per_seed, param_counts)
    curve = median_curve(per_seed)
    write_median_csv(out_dir / "median_return.csv", curve)
    if plot:
        plot_median_curve(curve, out_dir / "median_return.png",
                          title=f"{config.env}: median return across "
                                f"{len(per_seed)} seeds")
    logger.info("wrote %s", summary_path)
    return summary_path


def _parse_seeds(text: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ConfigError(f"--seeds wants comma-separated integers, got {text!r}")


def _resolve_run_config(args) -> ExperimentConfig:
    overrides = {}
    if args.env is not None:
        overrides["env"] = args.env
    if args.seeds is not None:
        overrides["seeds"] = _parse_seeds(args.seeds)
    if args.out is not None:
        overrides["out_dir"] = args.out

    if args.config is not None:
        return load_config(args.config, overrides)
    if args.env is None:
        raise ConfigError("pass --config FILE or --env NAME (preset)")
    if args.full_scale and args.seeds is None:
        overrides["seeds"] = list(range(FULL_SCALE_SEED_COUNT))
    return preset_config(args.env,
                         seeds=overrides.get("seeds"),
                         out_dir=overrides.get("out_dir"))


def cmd_run(args) -> int:
    config = _resolve_run_config(args)
    try:
        run_experiment(config, threads=args.threads, force=args.force,
                       plot=not args.no_plot)
    except DivergenceError as exc:
        print(f"error: training diverged: {exc} (partial outputs kept in "
              f"{config.out_dir})", file=sys.stderr)
        return 3
    return 0


def cmd_aggregate(args) -> int:
    curve = aggregate_runs(args.runs)
    out_csv = Path(args.out)
    write_median_csv(out_csv, curve, smooth=args.smooth)
    if not args.no_plot:
        plot_median_curve(curve, out_csv.with_suffix(".png"),
                          smooth=args.smooth)
    print(f"wrote {out_csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrtrpo",
        description="Low-rank trust-region policy optimization on "
                    "classic-control tasks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train one config across its seeds")
    run_p.add_argument("--config", help="YAML experiment config")
    run_p.add_argument("--env", choices=sorted(PRESETS),
                       help="use the named preset (or override the config's env)")
    run_p.add_argument("--seeds", help="comma-separated seed list")
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--threads", type=int, default=1,
                       help="parallel seed workers (1 = bit-exact sequential)")
    run_p.add_argument("--force", action="store_true",
                       help="allow writing into a non-empty output directory")
    run_p.add_argument("--full-scale", action="store_true",
                       help=f"preset runs use {FULL_SCALE_SEED_COUNT} seeds "
                            "instead of 20")
    run_p.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering")
    run_p.set_defaults(func=cmd_run)

    agg_p = sub.add_parser("aggregate",
                           help="merge finished runs into a median curve")
    agg_p.add_argument("--runs", nargs="+", required=True,
                       help="one or more run directories")
    agg_p.add_argument("--out", required=True, help="output CSV path")
    agg_p.add_argument("--smooth", type=int, default=0,
                       help="moving-average window (0 = off)")
    agg_p.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering")
    agg_p.set_defaults(func=cmd_aggregate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("LRTRPO_LOG", "INFO").upper(),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, AggregationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
