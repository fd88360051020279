# -*- coding: utf-8 -*-
# Nash Bargaining Solution for MTL (Nash-MTL)
import logging

import numpy as np
from numpy import sqrt as npSqrt

from gradlab._meta import HYPERPARAMS
from gradlab._types import CombineResult, CombinerState, UpdateDirection
from gradlab.utils import gram, verify_gradients

logger = logging.getLogger(__name__)

CLAMP = 1e-8


def nash_residual(K: np.ndarray, alpha: np.ndarray) -> float:
    return float(np.abs(K @ alpha - 1.0 / alpha).max())


def combine_nash(
    grads, state: CombinerState = None, damping: float = None, max_iters: int = None, tol: float = None, **kwargs
) -> CombineResult:
    """Combiner: Nash-MTL"""
    # Validate Arguments
    defaults = HYPERPARAMS["nash"]
    grads = verify_gradients(grads)
    state = state or CombinerState.initial("nash", grads.T)
    damping = float(damping) if damping and 0 < damping <= 1 else defaults["damping"]
    max_iters = int(max_iters) if max_iters and max_iters > 0 else defaults["max_iters"]
    tol = float(tol) if tol and tol > 0 else defaults["tol"]

    # Calculate Result
    K = gram(grads).entries
    T = grads.T
    # Exact for mutually orthogonal gradients.
    alpha = 1.0 / npSqrt(np.maximum(np.diag(K), CLAMP))
    converged = False
    residual = np.inf

    for _ in range(max_iters):
        residual = nash_residual(K, alpha)
        if residual <= tol:
            converged = True
            break
        inverse = 1.0 / np.maximum(K @ alpha, CLAMP)
        alpha = np.maximum((1.0 - damping) * alpha + damping * inverse, CLAMP)
        if not np.all(np.isfinite(alpha)):
            break
    else:
        residual = nash_residual(K, alpha)
        converged = residual <= tol

    if not converged:
        logger.debug(f"[i] Nash-MTL fixed point failed (residual {residual:.3e}), uniform fallback")
        alpha = np.full(T, 1.0 / T)

    # Name & Category
    return CombineResult(
        state=state.advance(),
        direction=UpdateDirection(grads.entries @ alpha, grads.level),
        diagnostics={
            "alpha": alpha,
            "converged": bool(converged),
            "residual": float(residual),
            "category": "manipulation",
        },
    )


combine_nash.__doc__ = """Nash-MTL

Treats the tasks as players bargaining over the update. The bargaining
solution maximizes the sum of the log decreases, whose optimality condition is
the nonlinear system K alpha = 1 / alpha with alpha > 0. It is solved with a
damped fixed point started from 1 / sqrt(diag K).

Calculation:
    Default Inputs:
        damping=0.5, max_iters=200, tol=1e-6
    alpha = (1 - damping) * alpha + damping / MAX(K alpha, 1e-8)
    success: MAX|K alpha - 1 / alpha| <= tol
    failure: alpha = 1 / T, converged = False
    direction = G alpha

Args:
    grads (TaskGradients): d x T gradient matrix, either level
    state (CombinerState): Carried unchanged apart from the step counter
    damping (float): Fixed point damping in (0, 1]. Default: 0.5
    max_iters (int): Iteration cap. Default: 200
    tol (float): Residual tolerance. Default: 1e-6

Returns:
    CombineResult: direction, diagnostics["alpha"], ["converged"], ["residual"]
"""
