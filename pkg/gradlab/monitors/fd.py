# -*- coding: utf-8 -*-
# Feature Disentanglement entropy (FD)
import numpy as np
from numpy import log as npLog

from gradlab._types import GradientLevel
from gradlab.utils import WrongGradientLevel, verify_gradients


def saliency_entropy(saliency: np.ndarray) -> np.ndarray:
    """Per-row entropy (natural log) of rows already normalized to sum 1."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(saliency > 0, saliency * npLog(saliency), 0.0)
    return -terms.sum(axis=1)


def fd_entropy(grads, **kwargs):
    """Monitor: Feature Disentanglement entropy (FD)"""
    # Validate Arguments
    grads = verify_gradients(grads, GradientLevel.FEATURE)
    if grads.level is not GradientLevel.FEATURE:
        raise WrongGradientLevel(GradientLevel.FEATURE.value, grads.level.value)
    zero = kwargs.pop("zero", 1e-12)
    with_flag = kwargs.pop("flag", False)

    # Calculate Result
    magnitude = np.abs(grads.entries)
    total = magnitude.sum(axis=1)
    included = total >= zero
    degenerate = not np.any(included)
    if degenerate:
        value = 0.0
    else:
        p = magnitude[included] / total[included, None]
        value = float(np.clip(saliency_entropy(p).mean(), 0.0, np.log(grads.T)))

    return (value, degenerate) if with_flag else value


fd_entropy.__doc__ = """Feature Disentanglement entropy (FD)

Treats the absolute feature-level gradients at each location as the
saliency of every task for that location, normalizes them into a
distribution over tasks and averages its entropy over locations. 0 means
every feature coordinate serves one task, ln T means full sharing.

Calculation:
    p_ij = |dL_i/dZ_j| / SUM_k |dL_k/dZ_j|
    E_j = -SUM_i p_ij ln p_ij            (0 ln 0 = 0)
    FD = MEAN_j E_j over locations with SUM_k |dL_k/dZ_j| >= 1e-12

Args:
    grads (TaskGradients): feature-level gradients, one row per location
        (a feature coordinate, or a (sample, coordinate) pair)

Kwargs:
    zero (float): Location exclusion threshold. Default: 1e-12
    flag (bool): Also return True when every location was excluded.
        Default: False

Returns:
    float: in [0, ln T], or (float, bool) with flag=True
"""
