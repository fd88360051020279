# -*- coding: utf-8 -*-
# Gradient Magnitude Similarity (GMS)
import numpy as np

from gradlab.utils import safe_norms, verify_gradients


def gms(grads, **kwargs) -> float:
    """Monitor: Gradient Magnitude Similarity (GMS)"""
    # Validate Arguments
    grads = verify_gradients(grads)
    zero = kwargs.pop("zero_norm", 1e-12)

    # Calculate Result
    T = grads.T
    norms, is_zero = safe_norms(grads.entries, zero)
    a, b = norms[:, None], norms[None, :]
    denom = a * a + b * b
    beta = np.where(denom > 0, 2.0 * a * b / np.where(denom > 0, denom, 1.0), 1.0)
    both = is_zero[:, None] & is_zero[None, :]
    one = is_zero[:, None] ^ is_zero[None, :]
    beta = np.where(both, 1.0, np.where(one, 0.0, beta))
    off_diagonal = beta.sum() - np.trace(beta)
    return float(np.clip(off_diagonal / (T * (T - 1)), 0.0, 1.0))


gms.__doc__ = """Gradient Magnitude Similarity (GMS)

Mean over ordered pairs of 2 ||g_i|| ||g_j|| / (||g_i||^2 + ||g_j||^2); 1 when
all task gradients have matching norms, towards 0 when one task dominates.

Calculation:
    beta_ij = 2 ||g_i|| ||g_j|| / (||g_i||^2 + ||g_j||^2)
    both norms zero: 1, exactly one zero: 0
    GMS = SUM_{i != j} beta_ij / (T (T - 1))

Args:
    grads (TaskGradients): d x T gradient matrix

Kwargs:
    zero_norm (float): Zero-gradient threshold. Default: 1e-12

Returns:
    float: in [0, 1]
"""
