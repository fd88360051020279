# -*- coding: utf-8 -*-
# Aligned-MTL
import logging

import numpy as np
from numpy import sqrt as npSqrt

from gradlab._meta import HYPERPARAMS
from gradlab._types import CombineResult, CombinerState, UpdateDirection
from gradlab.utils import gram, jacobi_eigh, verify_gradients

logger = logging.getLogger(__name__)


def aligned_basis(K: np.ndarray, rank_tol: float):
    """T x T matrix B with G B the aligned gradient matrix, or None when G is ~0."""
    eigenvalues, V = jacobi_eigh(K)
    lam_max = eigenvalues[0]
    if lam_max <= 0 or not np.isfinite(lam_max):
        return None, eigenvalues
    kept = eigenvalues > rank_tol * lam_max
    if not np.any(kept):
        return None, eigenvalues
    lam, Vk = eigenvalues[kept], V[:, kept]
    sigma_min = npSqrt(lam.min())
    return sigma_min * (Vk / npSqrt(lam)) @ Vk.T, eigenvalues


def combine_alignedmtl(grads, state: CombinerState = None, rank_tol: float = None, **kwargs) -> CombineResult:
    """Combiner: Aligned-MTL"""
    # Validate Arguments
    grads = verify_gradients(grads)
    state = state or CombinerState.initial("alignedmtl", grads.T)
    rank_tol = float(rank_tol) if rank_tol and rank_tol > 0 else HYPERPARAMS["alignedmtl"]["rank_tol"]

    # Calculate Result
    K = gram(grads).entries
    B, eigenvalues = aligned_basis(K, rank_tol)

    if B is None:
        logger.debug("[i] Aligned-MTL: gradient matrix is numerically zero")
        return CombineResult(
            state=state.advance(),
            direction=UpdateDirection(np.zeros(grads.d), grads.level),
            diagnostics={
                "alpha": np.zeros(grads.T),
                "degenerate": True,
                "eigenvalues": eigenvalues,
                "category": "manipulation",
            },
        )

    alpha = B.sum(axis=1)
    aligned = grads.entries @ B

    # Name & Category
    return CombineResult(
        state=state.advance(),
        direction=UpdateDirection(aligned.sum(axis=1), grads.level),
        diagnostics={
            "alpha": alpha,
            "aligned": aligned,
            "degenerate": False,
            "eigenvalues": eigenvalues,
            "category": "manipulation",
        },
    )


combine_alignedmtl.__doc__ = """Aligned-MTL

Replaces the gradient matrix by the closest matrix whose non-zero singular
values are all equal (condition number one), rescaled to the smallest
singular value, and sums its columns. Built from the spectral decomposition
of the Gram matrix.

Calculation:
    Default Inputs:
        rank_tol=1e-9
    K = G^T G = V diag(lam) V^T
    keep lam_i > rank_tol * lam_max
    sigma_min = sqrt(MIN(kept lam))
    G_hat = sigma_min * G V diag(lam^-1/2) V^T
    direction = G_hat 1

Args:
    grads (TaskGradients): d x T gradient matrix, either level
    state (CombinerState): Carried unchanged apart from the step counter
    rank_tol (float): Relative eigenvalue cut-off. Default: 1e-9

Returns:
    CombineResult: direction; a zero direction flagged degenerate when G ~ 0
"""
