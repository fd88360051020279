# -*- coding: utf-8 -*-
# Trajectory smoothing and scoring
from typing import List

import numpy as np
from pandas import Series

from gradlab._meta import DEFAULTS
from gradlab._types import Trajectory
from gradlab.utils import EmptyTrajectory


def moving_average(series, window: int = None) -> List[float]:
    """Monitor: Trailing Moving Average"""
    # Validate Arguments
    series = Series(series, dtype=float)
    if series.empty:
        raise ValueError("[X] moving_average needs a non-empty series")
    window = int(window) if window and window > 0 else max(1, len(series) // 10)

    # Calculate Result
    return series.rolling(window, min_periods=1).mean().tolist()


moving_average.__doc__ = """Trailing Moving Average

Equally weighted mean over the last 'window' elements. The head uses the
elements available so far, so the output keeps the input length and stays
aligned with iteration indices.

Calculation:
    Default Inputs:
        window = MAX(1, len // 10)
    out_t = MEAN(x[MAX(0, t - window + 1) .. t])

Args:
    series (list | np.ndarray | pd.Series): Values to smooth
    window (int): Window length. Default: a tenth of the series

Returns:
    list: smoothed values, same length as the input
"""


def trajectory_score(traj: Trajectory, field: str = "fd", tail: int = None, window: int = None) -> float:
    """Mean of the last 'tail' smoothed values of a snapshot field (default tail 50).

    Degenerate fd snapshots (zero feature gradients everywhere) are skipped.
    """
    if not traj.snapshots:
        raise EmptyTrajectory(traj.label)
    tail = int(tail) if tail and tail > 0 else DEFAULTS["tail"]
    smoothed = moving_average(traj.field_values(field, skip_degenerate=True), window)
    return float(np.mean(smoothed[-tail:]))


def relative_to_baseline(traj: Trajectory, baseline: Trajectory, field: str = "gds", window: int = None) -> List[float]:
    """Smoothed curve divided by the smoothed baseline curve at matching iterations.

    Iterations missing from either trajectory are dropped; a zero baseline value
    gives NaN so plots show the gap.
    """
    if not traj.snapshots or not baseline.snapshots:
        raise EmptyTrajectory(traj.label if not traj.snapshots else baseline.label)
    ours = dict(zip((s.iteration for s in traj.snapshots), moving_average(traj.field_values(field), window)))
    theirs = dict(zip((s.iteration for s in baseline.snapshots), moving_average(baseline.field_values(field), window)))
    shared = sorted(set(ours) & set(theirs))
    return [ours[k] / theirs[k] if theirs[k] != 0 else float("nan") for k in shared]
