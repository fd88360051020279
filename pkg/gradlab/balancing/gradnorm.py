# -*- coding: utf-8 -*-
# Gradient Normalization (GradNorm)
import numpy as np

from gradlab._meta import HYPERPARAMS
from gradlab._types import (
    CombineResult,
    CombinerState,
    GradWeights,
    LossVector,
    WeightConstraint,
)
from gradlab.utils import verify_gradients, verify_losses

MIN_WEIGHT = 1e-8


def weights_gradnorm(
    grads, losses, state: CombinerState = None, gamma: float = None, lr_w: float = None, **kwargs
) -> CombineResult:
    """Balancer: GradNorm"""
    # Validate Arguments
    defaults = HYPERPARAMS["gradnorm"]
    grads = verify_gradients(grads)
    losses = verify_losses(losses, grads.T)
    state = state or CombinerState.initial("gradnorm", grads.T)
    gamma = float(gamma) if gamma is not None else defaults["gamma"]
    lr_w = float(lr_w) if lr_w is not None else defaults["lr_w"]

    initial = state.initial_losses
    if initial is None:
        initial = LossVector(np.where(losses.values > 0, losses.values, 1e-8))

    # Calculate Result
    T = grads.T
    w = np.array(state.balancer_weights.values)
    grad_norms = grads.norms()
    norms = w * grad_norms

    ratio = losses.values / initial.values
    inverse_rate = ratio / ratio.mean() if ratio.mean() > 0 else np.ones(T)
    targets = norms.mean() * inverse_rate**gamma

    subgradient = np.sign(norms - targets) * grad_norms
    w = np.maximum(w - lr_w * subgradient, MIN_WEIGHT)
    w = w * T / w.sum()
    weights = GradWeights(w, WeightConstraint.SUM_T)

    # Name & Category
    return CombineResult(
        state=state.advance(balancer_weights=weights, initial_losses=initial),
        loss_weights=weights,
        diagnostics={
            "weights": w,
            "targets": targets,
            "inverse_rate": inverse_rate,
            "category": "balancing",
        },
    )


weights_gradnorm.__doc__ = """Gradient Normalization (GradNorm)

Adapts the loss weights so that each task's weighted gradient norm tracks a
common target, raised for tasks that train slower than average.

Calculation:
    Default Inputs:
        gamma=1.5, lr_w=0.025
    n_i = w_i ||g_i||
    r_i = (L_i / L_i(0)) / MEAN(L_k / L_k(0))
    t_i = MEAN(n) * r_i^gamma
    w = w - lr_w * sign(n_i - t_i) * ||g_i||
    w = T * w / SUM(w)

Args:
    grads (TaskGradients): d x T gradient matrix
    losses (LossVector): Current task losses, captured as L(0) on first call
    state (CombinerState): Holds balancer_weights and initial_losses
    gamma (float): Asymmetry exponent. Default: 1.5
    lr_w (float): Weight step size. Default: 0.025

Returns:
    CombineResult: loss_weights summing to T
"""
