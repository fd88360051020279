# -*- coding: utf-8 -*-
# Conflict-Averse Gradient Descent (CAGrad)
import numpy as np
from numpy import sqrt as npSqrt

from gradlab._meta import HYPERPARAMS
from gradlab._types import CombineResult, CombinerState, UpdateDirection
from gradlab.utils import gram, simplex_project, verify_gradients


def cagrad_objective(K: np.ndarray, w: np.ndarray, c: float) -> float:
    """Dual objective F(w) = <G w, g0> + c ||g0|| ||G w|| written on the Gram matrix."""
    T = K.shape[0]
    mean = np.full(T, 1.0 / T)
    g0_norm = npSqrt(max(mean @ K @ mean, 0.0))
    return float(w @ K @ mean + c * g0_norm * npSqrt(max(w @ K @ w, 0.0)))


def combine_cagrad(
    grads, state: CombinerState = None, c: float = None, subproblem_iters: int = None, **kwargs
) -> CombineResult:
    """Combiner: Conflict-Averse Gradient Descent (CAGrad)"""
    # Validate Arguments
    defaults = HYPERPARAMS["cagrad"]
    grads = verify_gradients(grads)
    state = state or CombinerState.initial("cagrad", grads.T)
    c = float(c) if c is not None and c >= 0 else defaults["c"]
    subproblem_iters = int(subproblem_iters) if subproblem_iters and subproblem_iters > 0 else defaults["subproblem_iters"]
    step = float(kwargs.pop("step", defaults["step"]))
    zero = kwargs.pop("zero_norm", 1e-12)

    # Calculate Result
    G = grads.entries
    T = grads.T
    g0 = G.mean(axis=1)
    uniform = np.full(T, 1.0 / T)
    diagnostics = {"alpha": uniform, "w": uniform, "c": c, "category": "manipulation"}

    if c == 0.0:
        return CombineResult(
            state=state.advance(),
            direction=UpdateDirection(g0, grads.level),
            diagnostics=diagnostics,
        )

    K = gram(grads).entries
    sqrt_phi = c * np.linalg.norm(g0)
    # Dividing by the mean squared gradient norm keeps the fixed step scale free.
    scale = np.trace(K) / T
    w = uniform.copy()
    if scale > 0:
        linear = K @ uniform
        for _ in range(subproblem_iters):
            gw_norm = npSqrt(max(w @ K @ w, 0.0))
            if gw_norm < zero:
                break
            gradient = (linear + sqrt_phi * (K @ w) / gw_norm) / scale
            w = simplex_project(w - step * gradient).values

    gw = G @ w
    gw_norm = np.linalg.norm(gw)
    if gw_norm < zero:
        direction = g0
    else:
        lam = sqrt_phi / gw_norm
        direction = g0 + lam * gw
        diagnostics["alpha"] = uniform + lam * w
    diagnostics["w"] = w

    # Name & Category
    return CombineResult(
        state=state.advance(),
        direction=UpdateDirection(direction, grads.level),
        diagnostics=diagnostics,
    )


combine_cagrad.__doc__ = """Conflict-Averse Gradient Descent (CAGrad)

Searches, within a ball of radius c * ||g0|| around the average gradient g0,
for the direction that maximizes the worst-case decrease over tasks. The dual
is a small problem over the simplex solved by projected gradient descent.

Calculation:
    Default Inputs:
        c=0.4, subproblem_iters=100, step=0.05
    g0 = MEAN(g_i)
    phi = c^2 ||g0||^2
    w* = argmin_{w in simplex} <G w, g0> + sqrt(phi) ||G w||
    direction = g0 + sqrt(phi) / ||G w*|| * G w*

Args:
    grads (TaskGradients): d x T gradient matrix, either level
    state (CombinerState): Carried unchanged apart from the step counter
    c (float): Trust-region radius relative to ||g0||. Default: 0.4
    subproblem_iters (int): Projected gradient iterations. Default: 100

Kwargs:
    step (float): Projected gradient step on the normalized dual. Default: 0.05
    zero_norm (float): ||G w*|| below this returns g0. Default: 1e-12

Returns:
    CombineResult: direction with ||direction - g0|| = c ||g0||
"""
