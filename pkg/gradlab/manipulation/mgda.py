# -*- coding: utf-8 -*-
# Multiple Gradient Descent Algorithm (MGDA)
from gradlab._meta import HYPERPARAMS
from gradlab._types import CombineResult, CombinerState
from gradlab.utils import min_norm_point, verify_gradients


def combine_mgda(grads, state: CombinerState = None, max_iters: int = None, tol: float = None, **kwargs) -> CombineResult:
    """Combiner: Multiple Gradient Descent Algorithm (MGDA)"""
    # Validate Arguments
    grads = verify_gradients(grads)
    state = state or CombinerState.initial("mgda", grads.T)
    max_iters = max_iters or HYPERPARAMS["mgda"]["max_iters"]
    tol = tol or HYPERPARAMS["mgda"]["tol"]

    # Calculate Result
    alpha, direction, converged = min_norm_point(grads, max_iters, tol)

    # Name & Category
    return CombineResult(
        state=state.advance(),
        direction=direction,
        diagnostics={"alpha": alpha.values, "converged": converged, "category": "manipulation"},
    )


combine_mgda.__doc__ = """Multiple Gradient Descent Algorithm (MGDA)

The update is the min-norm point of the convex hull of the task gradients, a
common descent direction for every task whenever one exists.

Calculation:
    Default Inputs:
        max_iters=250, tol=1e-8
    alpha* = argmin_{alpha in simplex} ||G alpha||
    direction = G alpha*

Args:
    grads (TaskGradients): d x T gradient matrix, either level
    state (CombinerState): Carried unchanged apart from the step counter
    max_iters (int): Frank-Wolfe iteration cap. Default: 250
    tol (float): Relative optimality gap. Default: 1e-8

Returns:
    CombineResult: direction, diagnostics["alpha"] and ["converged"]
"""
