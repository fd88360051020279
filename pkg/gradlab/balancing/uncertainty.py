# -*- coding: utf-8 -*-
# Uncertainty Weighting
import numpy as np
from numpy import exp as npExp

from gradlab._meta import DEFAULTS
from gradlab._types import CombineResult, CombinerState, GradWeights, WeightConstraint
from gradlab.utils import verify_losses

S_BOUND = 10.0


def weights_uncertainty(losses, state: CombinerState, lr_s: float = None, **kwargs) -> CombineResult:
    """Balancer: Uncertainty Weighting"""
    # Validate Arguments
    losses = verify_losses(losses, state.log_variances.shape[0])
    lr_s = float(lr_s) if lr_s is not None else DEFAULTS["lr"]

    # Calculate Result
    s = state.log_variances
    w = npExp(-s)
    s_gradient = -w * losses.values + 1.0
    s_next = np.clip(s - lr_s * s_gradient, -S_BOUND, S_BOUND)

    # Name & Category
    return CombineResult(
        state=state.advance(log_variances=s_next),
        loss_weights=GradWeights(w, WeightConstraint.POSITIVE),
        diagnostics={"weights": w, "s_gradient": s_gradient, "category": "balancing"},
    )


weights_uncertainty.__doc__ = """Uncertainty Weighting

Each task carries a trainable log-variance s_i. The weighted objective is
SUM exp(-s_i) L_i + s_i; its loss weights are exp(-s_i) and s takes one
gradient step per call.

Calculation:
    Default Inputs:
        lr_s = trainer learning rate (0.05)
    w_i = exp(-s_i)
    dJ/ds_i = -exp(-s_i) L_i + 1
    s = CLIP(s - lr_s * dJ/ds, -10, 10)

Args:
    losses (LossVector): Current task losses
    state (CombinerState): Holds log_variances
    lr_s (float): Step size for s. Default: 0.05

Returns:
    CombineResult: positive loss_weights (from s before the step)
"""
