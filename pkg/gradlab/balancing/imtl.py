# -*- coding: utf-8 -*-
# Impartial Multi-Task Learning, gradient side (IMTL-G)
import logging

import numpy as np

from gradlab._types import CombineResult, CombinerState, UpdateDirection
from gradlab.utils import SingularSystem, solve_linear, verify_gradients

logger = logging.getLogger(__name__)


def combine_imtl(grads, losses=None, state: CombinerState = None, **kwargs) -> CombineResult:
    """Combiner: IMTL-G"""
    # Validate Arguments
    grads = verify_gradients(grads)
    state = state or CombinerState.initial("imtl", grads.T)
    zero = kwargs.pop("zero_norm", 1e-12)

    # Calculate Result
    G = grads.entries
    T = grads.T
    alpha = np.full(T, 1.0 / T)
    norms = np.linalg.norm(G, axis=0)
    degenerate = bool(np.any(norms <= zero))
    converged = True

    if not degenerate:
        U = G / norms
        U_diff = U[:, :1] - U[:, 1:]
        if np.abs(U_diff).max() <= zero:
            degenerate = True
        else:
            D = G[:, 1:] - G[:, :1]
            try:
                beta = solve_linear(U_diff.T @ D, -(U_diff.T @ G[:, 0]))
                alpha = np.concatenate([[1.0 - beta.sum()], beta])
            except SingularSystem as e:
                logger.debug(f"[i] IMTL-G fallback to uniform weights: {e}")
                converged = False

    # Name & Category
    return CombineResult(
        state=state.advance(),
        direction=UpdateDirection(G @ alpha, grads.level),
        diagnostics={
            "alpha": alpha,
            "converged": converged,
            "degenerate": degenerate,
            "category": "balancing",
        },
    )


combine_imtl.__doc__ = """IMTL-G

Finds the combination of task gradients, with coefficients summing to one,
whose projections onto every unit task gradient are equal, so no task is
favoured by the shared update.

Calculation:
    u_i = g_i / ||g_i||
    alpha = (1 - SUM(beta), beta)
    (u_1 - u_i)^T (g_1 + SUM_k beta_k (g_k - g_1)) = 0,  i = 2..T
    direction = G alpha

Args:
    grads (TaskGradients): d x T gradient matrix, either level
    losses (LossVector): Unused; accepted for a uniform signature
    state (CombinerState): Carried unchanged apart from the step counter

Kwargs:
    zero_norm (float): Zero-gradient threshold. Default: 1e-12

Returns:
    CombineResult: direction, diagnostics["alpha"], ["converged"], ["degenerate"]
"""
