# -*- coding: utf-8 -*-
# Projecting Conflicting Gradients (PCGrad)
import numpy as np

from gradlab._types import CombineResult, CombinerState, UpdateDirection
from gradlab.utils import get_rng, verify_gradients


def combine_pcgrad(grads, state: CombinerState = None, rng=None, **kwargs) -> CombineResult:
    """Combiner: Projecting Conflicting Gradients (PCGrad)"""
    # Validate Arguments
    grads = verify_gradients(grads)
    state = state or CombinerState.initial("pcgrad", grads.T)
    rng = get_rng(rng)
    zero = kwargs.pop("zero_norm", 1e-12)
    shuffle = kwargs.pop("shuffle", True)

    # Calculate Result
    G = grads.entries
    T = grads.T
    sq_norms = np.einsum("di,di->i", G, G)
    # Row i holds the coefficients of g_i' over the original columns.
    coef = np.eye(T)

    for i in range(T):
        others = np.array([j for j in range(T) if j != i])
        for j in rng.permutation(others) if shuffle else others:
            if sq_norms[j] < zero * zero:
                continue
            dot = (G @ coef[i]) @ G[:, j]
            if dot < 0:
                coef[i, j] -= dot / sq_norms[j]

    alpha = coef.sum(axis=0)
    direction = (G @ coef.T).sum(axis=1)

    # Name & Category
    return CombineResult(
        state=state.advance(),
        direction=UpdateDirection(direction, grads.level),
        diagnostics={"alpha": alpha, "surgery": coef, "category": "manipulation"},
    )


combine_pcgrad.__doc__ = """Projecting Conflicting Gradients (PCGrad)

Each task gradient is visited once. The other tasks are taken in a shuffled
order, and whenever the running gradient conflicts with one of them (negative
inner product) it is projected onto the normal plane of that task's original
gradient.

Calculation:
    Default Inputs:
        single pass, shuffled order per task
    for i in tasks:
        g_i' = g_i
        for j in shuffle(tasks - {i}):
            if <g_i', g_j> < 0:
                g_i' = g_i' - <g_i', g_j> / ||g_j||^2 * g_j
    direction = SUM(g_i')

Args:
    grads (TaskGradients): d x T gradient matrix, either level
    state (CombinerState): Carried unchanged apart from the step counter
    rng (np.random.Generator | int): Source of the shuffled orders

Kwargs:
    zero_norm (float): Gradients shorter than this are never projected
        against. Default: 1e-12
    shuffle (bool): False visits the other tasks in index order. Default: True

Returns:
    CombineResult: direction, diagnostics["alpha"] with direction = G @ alpha
"""
