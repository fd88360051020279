# -*- coding: utf-8 -*-
# Fast Adaptive Multitask Optimization (FAMO)
import numpy as np
from numpy import log as npLog

from gradlab._meta import HYPERPARAMS
from gradlab._types import CombineResult, CombinerState, GradWeights, WeightConstraint
from gradlab.utils import softmax, verify_losses


def softmax_vjp(xi: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """J^T delta for the softmax Jacobian J at xi."""
    w = softmax(xi)
    return w * (delta - w @ delta)


def weights_famo(
    losses_prev, losses_new, state: CombinerState, lr_xi: float = None, eps: float = None, **kwargs
) -> CombineResult:
    """Balancer: FAMO"""
    # Validate Arguments
    defaults = HYPERPARAMS["famo"]
    T = state.log_weights.shape[0]
    losses_new = verify_losses(losses_new, T)
    lr_xi = float(lr_xi) if lr_xi is not None else defaults["lr_xi"]
    eps = float(eps) if eps is not None else defaults["eps"]

    # Calculate Result
    xi = np.array(state.log_weights, dtype=float)
    delta = np.zeros(T)
    if losses_prev is not None:
        losses_prev = verify_losses(losses_prev, T)
        delta = npLog(losses_prev.values + eps) - npLog(losses_new.values + eps)
        xi = xi - lr_xi * softmax_vjp(xi, delta)

    w = softmax(xi)
    c = w / (losses_new.values + eps)
    c = c / c.sum()

    # Name & Category
    return CombineResult(
        state=state.advance(log_weights=xi, loss_history=(losses_new,)),
        loss_weights=GradWeights(c, WeightConstraint.SIMPLEX),
        diagnostics={"weights": c, "softmax": w, "delta": delta, "category": "balancing"},
    )


weights_famo.__doc__ = """Fast Adaptive Multitask Optimization (FAMO)

Balances the relative (log-scale) improvement of the tasks with a softmax over
trainable logits xi. The improvement delta observed since the previous call
moves xi one step against delta, so tasks that improved more lose weight.
Weights are then divided by the current losses (gradient of log L).

Calculation:
    Default Inputs:
        lr_xi=0.025, eps=1e-8
    delta_i = log(L_i,prev + eps) - log(L_i,new + eps)
    xi = xi - lr_xi * J^T delta,    J = softmax Jacobian at xi
    w = softmax(xi)
    c_i = (w_i / (L_i,new + eps)) / SUM_k (w_k / (L_k,new + eps))

Args:
    losses_prev (LossVector | None): Losses before the last parameter step;
        None skips the xi update
    losses_new (LossVector): Current losses
    state (CombinerState): Holds log_weights (xi)
    lr_xi (float): Logit step size. Default: 0.025
    eps (float): Loss shift. Default: 1e-8

Returns:
    CombineResult: loss_weights in the simplex
"""
