# -*- coding: utf-8 -*-
# Random Gradient / Loss Weighting (RGW, RLW)
from gradlab._types import (
    CombineResult,
    CombinerState,
    GradWeights,
    UpdateDirection,
    WeightConstraint,
)
from gradlab.utils import get_rng, softmax, verify_gradients

MODES = ("rgw", "rlw")


def combine_random_weighting(
    grads, losses=None, state: CombinerState = None, rng=None, mode: str = "rgw", **kwargs
) -> CombineResult:
    """Combiner: Random Gradient Weighting (RGW) / Random Loss Weighting (RLW)"""
    # Validate Arguments
    grads = verify_gradients(grads)
    mode = str(mode).lower()
    if mode not in MODES:
        raise ValueError(f"[X] mode must be one of {MODES}, got {mode!r}")
    state = state or CombinerState.initial(mode, grads.T)
    rng = get_rng(rng)

    # Calculate Result
    z = rng.standard_normal(grads.T)
    w = GradWeights(softmax(z), WeightConstraint.SIMPLEX)

    # Name & Category
    if mode == "rgw":
        return CombineResult(
            state=state.advance(),
            direction=UpdateDirection(grads.entries @ w.values, grads.level),
            diagnostics={"alpha": w.values, "category": "manipulation"},
        )
    return CombineResult(
        state=state.advance(),
        loss_weights=w,
        diagnostics={"weights": w.values, "category": "balancing"},
    )


combine_random_weighting.__doc__ = """Random Gradient / Loss Weighting (RGW, RLW)

Draws standard-normal logits and normalizes them with a softmax into the
probability simplex. RGW combines the shared gradients with these weights;
RLW hands them to the trainer as loss weights, so task heads scale too.

Calculation:
    z ~ N(0, I_T)
    w = softmax(z)
    RGW: direction = G @ w
    RLW: loss_weights = w

Args:
    grads (TaskGradients): d x T gradient matrix
    losses (LossVector): Unused; accepted for a uniform signature
    state (CombinerState): Carried unchanged apart from the step counter
    rng (np.random.Generator | int): Source of the logits
    mode (str): 'rgw' or 'rlw'. Default: 'rgw'

Returns:
    CombineResult: direction (RGW) or loss_weights (RLW)
"""
