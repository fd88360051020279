# -*- coding: utf-8 -*-
# Gradient Sign Dropout (GradDrop)
import numpy as np

from gradlab._types import CombineResult, CombinerState, UpdateDirection
from gradlab.utils import get_rng, verify_gradients


def sign_purity(matrix: np.ndarray, zero: float = 1e-12) -> np.ndarray:
    """Positive sign purity P_j = 0.5 * (1 + sum_i G_ji / sum_i |G_ji|)."""
    matrix = np.asarray(matrix, dtype=float)
    total = matrix.sum(axis=1)
    magnitude = np.abs(matrix).sum(axis=1)
    purity = np.full(matrix.shape[0], 0.5)
    live = magnitude >= zero
    purity[live] = 0.5 * (1.0 + total[live] / magnitude[live])
    return purity


def graddrop_mask(matrix: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Boolean d x T mask of the entries kept for the given uniform draws.

    Works for any task count, including a single task.
    """
    matrix = np.asarray(matrix, dtype=float)
    keep_positive = (sign_purity(matrix) > np.asarray(uniforms))[:, None]
    return np.where(keep_positive, matrix > 0, matrix < 0)


def combine_graddrop(grads, state: CombinerState = None, rng=None, **kwargs) -> CombineResult:
    """Combiner: Gradient Sign Dropout (GradDrop)"""
    # Validate Arguments
    grads = verify_gradients(grads)
    state = state or CombinerState.initial("graddrop", grads.T)
    rng = get_rng(rng)

    # Calculate Result
    G = grads.entries
    uniforms = rng.uniform(0.0, 1.0, size=grads.d)
    mask = graddrop_mask(G, uniforms)
    direction = np.where(mask, G, 0.0).sum(axis=1)

    # Name & Category
    return CombineResult(
        state=state.advance(),
        direction=UpdateDirection(direction, grads.level),
        diagnostics={"alpha": mask.astype(float), "purity": sign_purity(G), "category": "manipulation"},
    )


combine_graddrop.__doc__ = """Gradient Sign Dropout (GradDrop)

Per coordinate, a sign is sampled with probability given by the positive sign
purity of the task gradients at that coordinate; only the entries with the
sampled sign survive. Coordinates where every task agrees are kept whole.

Calculation:
    P_j = 0.5 * (1 + SUM_i G_ji / SUM_i |G_ji|)    (0.5 when the row is zero)
    U_j ~ Uniform(0, 1)
    keep positive entries of row j if P_j > U_j, else negative entries
    direction_j = SUM(kept entries of row j)

Args:
    grads (TaskGradients): d x T gradient matrix, either level
    state (CombinerState): Carried unchanged apart from the step counter
    rng (np.random.Generator | int): Source of the uniform draws

Returns:
    CombineResult: direction and diagnostics["alpha"], the d x T keep mask
"""
