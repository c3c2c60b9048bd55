"""CSV/JSON emission and cross-seed aggregation of training results.

File formats are deliberately boring and stable:
  - per-seed returns:   header ``seed,episode,return``, one row per episode
  - median curve:       header ``episode,median,q1,q3``
  - summary:            one JSON object with fixed keys
All CSVs use '.' decimals and LF line endings, so byte-identical reruns are
possible on any platform.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np


class AggregationError(ValueError):
    """Run directories disagree in a way that blocks aggregation."""


def write_returns_csv(path, seed: int, returns) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "episode", "return"])
        for episode, ret in enumerate(returns):
            writer.writerow([seed, episode, repr(float(ret))])


def read_returns_csv(path) -> tuple[int, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        seeds, returns = [], []
        for row in reader:
            seeds.append(int(row["seed"]))
            returns.append(float(row["return"]))
    if not returns:
        raise AggregationError(f"{path}: no return rows")
    if len(set(seeds)) != 1:
        raise AggregationError(f"{path}: mixed seeds {sorted(set(seeds))}")
    return seeds[0], np.array(returns)


def write_diagnostics_jsonl(path, history) -> None:
    """One JSON object per iteration: trust-region step + critic loss."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for diag in history.iterations:
            record = {
                "iteration": diag.iteration,
                "episode_returns": [float(r) for r in diag.episode_returns],
                "critic_loss_initial": diag.critic_loss_initial,
                "critic_loss_final": diag.critic_loss_final,
                "wall_time": diag.wall_time,
            }
            record.update(
                {f"step_{k}": v for k, v in
                 dataclasses.asdict(diag.step).items()}
            )
            fh.write(json.dumps(record) + "\n")


def median_curve(per_seed_returns: dict) -> dict:
    """Per-episode median and quartiles across seeds.

    per_seed_returns maps seed -> 1-D array of episode returns; all seeds
    must have the same episode count.
    """
    if not per_seed_returns:
        raise AggregationError("no runs to aggregate")
    lengths = {seed: len(r) for seed, r in per_seed_returns.items()}
    if len(set(lengths.values())) != 1:
        offenders = ", ".join(f"seed {s}: {n} episodes"
                              for s, n in sorted(lengths.items()))
        raise AggregationError(f"episode counts differ across seeds ({offenders})")
    stacked = np.vstack([per_seed_returns[s] for s in sorted(per_seed_returns)])
    return {
        "episodes": np.arange(stacked.shape[1]),
        "median": np.median(stacked, axis=0),
        "q1": np.percentile(stacked, 25, axis=0),
        "q3": np.percentile(stacked, 75, axis=0),
    }


def moving_average(values, window: int) -> np.ndarray:
    """Trailing moving average; the first window-1 entries use what exists."""
    values = np.asarray(values, dtype=float)
    if window <= 1:
        return values.copy()
    out = np.empty_like(values)
    csum = np.cumsum(values)
    for t in range(len(values)):
        lo = max(0, t - window + 1)
        out[t] = (csum[t] - (csum[lo - 1] if lo > 0 else 0.0)) / (t - lo + 1)
    return out


def moving_median(values, window: int) -> np.ndarray:
    """Trailing moving median over the same ragged-start convention."""
    values = np.asarray(values, dtype=float)
    return np.array([np.median(values[max(0, t - window + 1):t + 1])
                     for t in range(len(values))])


def write_median_csv(path, curve: dict, smooth: int = 0) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    med = moving_average(curve["median"], smooth) if smooth else curve["median"]
    q1 = moving_average(curve["q1"], smooth) if smooth else curve["q1"]
    q3 = moving_average(curve["q3"], smooth) if smooth else curve["q3"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["episode", "median", "q1", "q3"])
        for ep, m, a, b in zip(curve["episodes"], med, q1, q3):
            writer.writerow([int(ep), repr(float(m)), repr(float(a)), repr(float(b))])


def collect_run_returns(run_dir) -> dict:
    """Read every seed_*/returns.csv below a run directory."""
    run_dir = Path(run_dir)
    out = {}
    for csv_path in sorted(run_dir.glob("seed_*/returns.csv")):
        seed, returns = read_returns_csv(csv_path)
        out[seed] = returns
    if not out:
        raise AggregationError(f"{run_dir}: no seed_*/returns.csv files found")
    return out


def aggregate_runs(run_dirs) -> dict:
    """Merge per-seed returns from one or more run directories."""
    merged = {}
    for run_dir in run_dirs:
        for seed, returns in collect_run_returns(run_dir).items():
            if seed in merged:
                raise AggregationError(
                    f"seed {seed} appears in more than one run directory")
            merged[seed] = returns
    return median_curve(merged)


def write_summary_json(path, config, per_seed_returns: dict,
                       param_counts: dict) -> None:
    curve = median_curve(per_seed_returns)
    summary = {
        "env": config.env,
        "seeds": sorted(per_seed_returns),
        "n_episodes_per_seed": int(len(curve["median"])),
        "param_count": int(param_counts["total"]),
        "param_count_breakdown": {k: int(v) for k, v in param_counts.items()},
        "median_return_per_episode": [float(x) for x in curve["median"]],
        "final_median_return": float(curve["median"][-1]),
        "config": config.to_dict(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=False)
        fh.write("\n")
