# -*- coding: utf-8 -*-
# Gradient Vaccine (GradVac)
import numpy as np
from numpy import sqrt as npSqrt

from gradlab._meta import HYPERPARAMS
from gradlab._types import CombineResult, CombinerState, UpdateDirection
from gradlab.utils import verify_gradients

TARGET_CLAMP = 1.0 - 1e-6


def combine_gradvac(grads, state: CombinerState = None, beta: float = None, **kwargs) -> CombineResult:
    """Combiner: Gradient Vaccine (GradVac)"""
    # Validate Arguments
    grads = verify_gradients(grads)
    state = state or CombinerState.initial("gradvac", grads.T)
    beta = float(beta) if beta and 0 < beta < 1 else HYPERPARAMS["gradvac"]["beta"]
    zero = kwargs.pop("zero_norm", 1e-12)

    # Calculate Result
    G = grads.entries
    T = grads.T
    norms = np.linalg.norm(G, axis=0)
    targets = np.array(state.ema_targets, dtype=float)
    coef = np.eye(T)

    for i in range(T):
        for j in range(T):
            if i == j or norms[j] < zero:
                continue
            g_i = G @ coef[i]
            norm_i = np.linalg.norm(g_i)
            if norm_i < zero:
                continue
            phi = float(np.clip(g_i @ G[:, j] / (norm_i * norms[j]), -1.0, 1.0))
            target = targets[i, j]
            if phi < target:
                scale = norm_i * (
                    target * npSqrt(1.0 - phi * phi) - phi * npSqrt(1.0 - target * target)
                )
                coef[i, j] += scale / (norms[j] * npSqrt(1.0 - target * target))
            targets[i, j] = np.clip(
                (1.0 - beta) * target + beta * phi, -TARGET_CLAMP, TARGET_CLAMP
            )

    alpha = coef.sum(axis=0)
    direction = (G @ coef.T).sum(axis=1)

    # Name & Category
    return CombineResult(
        state=state.advance(ema_targets=targets),
        direction=UpdateDirection(direction, grads.level),
        diagnostics={"alpha": alpha, "surgery": coef, "category": "manipulation"},
    )


combine_gradvac.__doc__ = """Gradient Vaccine (GradVac)

Generalizes PCGrad: instead of only removing conflicts, every ordered pair of
tasks is pushed towards a target cosine similarity. Targets are per pair and
track the observed cosine with an exponential moving average. With all targets
at 0 the update is exactly a PCGrad projection.

Calculation:
    Default Inputs:
        beta=0.01, targets initialized to 0
    phi = cos(g_i', g_j)
    if phi < target_ij:
        g_i' += ||g_i'|| * (target*sqrt(1-phi^2) - phi*sqrt(1-target^2))
                / (||g_j|| * sqrt(1-target^2)) * g_j
    target_ij = (1 - beta) * target_ij + beta * phi
    direction = SUM(g_i')

Args:
    grads (TaskGradients): d x T gradient matrix, either level
    state (CombinerState): Holds ema_targets (T x T)
    beta (float): EMA decay in (0, 1). Default: 0.01

Kwargs:
    zero_norm (float): Pairs with a zero-norm gradient are skipped. Default: 1e-12

Returns:
    CombineResult: direction and the state with updated targets
"""
