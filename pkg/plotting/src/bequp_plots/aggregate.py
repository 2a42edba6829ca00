"""Load and aggregate experiment CSVs produced by the bequp harness.

The input contract is the harness CSV header; files are validated against it
column by column so schema drift fails loudly.  Aggregation groups rows by
(algorithm, noise model, path count) and reports the mean resource cost with
its standard error over trials.
"""

from __future__ import annotations

import math

import numpy as np
import pandas as pd

REQUIRED_COLUMNS = [
    "algo", "metric", "noise_model", "n", "K", "L", "trial", "seed",
    "output_path", "true_best", "success", "resource_cost", "rounds",
    "wall_time_ms",
]

METRICS = ("fidelity", "skf")

#: algorithms with no per-link estimates; dropped from key-fraction figures
PATH_ONLY_ALGORITHMS = ("uniform-path", "succ-elim", "linkselfie")

#: canonical panel order; unknown models follow alphabetically
NOISE_ORDER = ("depolarizing", "dephasing", "amplitude_damping", "bit_flip")


class SchemaError(ValueError):
    """The CSV does not match the harness output contract."""


class NoRecordsError(ValueError):
    """The CSV holds no usable rows for the requested metric."""


def load_records(path: str) -> pd.DataFrame:
    df = pd.read_csv(path)
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise SchemaError(f"missing column(s) {', '.join(missing)} in {path}")
    return df


def select_metric(df: pd.DataFrame, metric: str) -> pd.DataFrame:
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    out = df[df["metric"] == metric]
    if metric == "skf":
        out = out[~out["algo"].isin(PATH_ONLY_ALGORITHMS)]
    if out.empty:
        raise NoRecordsError(f"no records for metric {metric!r}")
    return out


def aggregate(df: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard error of resource cost per (algo, noise_model, K)."""
    grouped = df.groupby(["algo", "noise_model", "K"], as_index=False).agg(
        mean_cost=("resource_cost", "mean"),
        sd_cost=("resource_cost", lambda v: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0),
        trials=("resource_cost", "size"),
    )
    grouped["se_cost"] = grouped["sd_cost"] / np.sqrt(grouped["trials"])
    return grouped.drop(columns=["sd_cost"]).sort_values(
        ["algo", "noise_model", "K"]).reset_index(drop=True)


def noise_panels(df: pd.DataFrame) -> list:
    present = set(df["noise_model"].unique())
    ordered = [m for m in NOISE_ORDER if m in present]
    ordered += sorted(present - set(NOISE_ORDER))
    return ordered


def legend_order(agg: pd.DataFrame) -> list:
    """Algorithms sorted by mean cost at the largest K, most expensive first."""
    kmax = agg["K"].max()
    at_max = agg[agg["K"] == kmax].groupby("algo")["mean_cost"].mean()
    by_cost = at_max.sort_values(ascending=False)
    ordered = list(by_cost.index)
    ordered += sorted(set(agg["algo"].unique()) - set(ordered))
    return ordered
