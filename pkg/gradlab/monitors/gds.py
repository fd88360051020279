# -*- coding: utf-8 -*-
# Gradient Direction Similarity (GDS)
import numpy as np

from gradlab.utils import safe_norms, verify_gradients


def cosine_matrix(grads, zero: float = 1e-12) -> np.ndarray:
    """Pairwise cosines; pairs involving a zero gradient are 0."""
    G = verify_gradients(grads).entries
    norms, is_zero = safe_norms(G, zero)
    safe = np.where(is_zero, 1.0, norms)
    C = (G.T @ G) / np.outer(safe, safe)
    C[is_zero, :] = 0.0
    C[:, is_zero] = 0.0
    return np.clip(C, -1.0, 1.0)


def gds(grads, **kwargs) -> float:
    """Monitor: Gradient Direction Similarity (GDS)"""
    # Validate Arguments
    grads = verify_gradients(grads)
    zero = kwargs.pop("zero_norm", 1e-12)

    # Calculate Result
    T = grads.T
    C = cosine_matrix(grads, zero)
    off_diagonal = C.sum() - np.trace(C)
    return float(np.clip(off_diagonal / (T * (T - 1)), -1.0, 1.0))


gds.__doc__ = """Gradient Direction Similarity (GDS)

Mean cosine similarity over ordered pairs of distinct task gradients. Values
near -1 signal conflicting tasks, near 1 aligned tasks.

Calculation:
    GDS = SUM_{i != j} <g_i, g_j> / (||g_i|| ||g_j||) / (T (T - 1))

Args:
    grads (TaskGradients): d x T gradient matrix

Kwargs:
    zero_norm (float): Pairs with a shorter gradient count as 0. Default: 1e-12

Returns:
    float: in [-1, 1]
"""
