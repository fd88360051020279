# -*- coding: utf-8 -*-
# Cosine Similarity Regularization (CosReg)
import numpy as np

from gradlab._meta import HYPERPARAMS
from gradlab._types import CombineResult, CombinerState, GradientLevel, UpdateDirection
from gradlab.utils import verify_gradients

STENCILS = {
    2: ((1.0, -1.0), (1.0, -1.0), 2.0),
    4: ((2.0, 1.0, -1.0, -2.0), (-1.0, 8.0, -8.0, 1.0), 12.0),
}


def _task_gradients_batch(problem, W_batch: np.ndarray, V: np.ndarray, level: GradientLevel) -> np.ndarray:
    """Task gradients for a batch of shared weights: (B, d_level, T)."""
    X, act = problem.X, problem.activation
    U = np.einsum("kn,bmn->bkm", X, W_batch, optimize=True)
    pred = np.einsum("bkm,mi->bki", act.apply(U), V, optimize=True)
    scale = 2.0 * (pred - problem.Y[None]) / problem.N
    if level is GradientLevel.FEATURE:
        return V[None] * scale.sum(axis=1)[:, None, :]
    grads = np.einsum(
        "bki,mi,bkm,kn->bmni", scale, V, act.derivative(U), X, optimize=True
    )
    return grads.reshape(W_batch.shape[0], problem.d, problem.T)


def squared_cosines(grads: np.ndarray, zero: float = 1e-12) -> np.ndarray:
    """Sum over pairs i < j of cos^2(g_i, g_j) for a (B, d, T) batch; zero gradients add 0."""
    K = np.einsum("bdi,bdj->bij", grads, grads)
    sq_norms = np.einsum("bii->bi", K)
    live = sq_norms >= zero * zero
    denom = sq_norms[:, :, None] * sq_norms[:, None, :]
    pair_live = live[:, :, None] & live[:, None, :]
    cos2 = np.where(pair_live, K * K / np.where(pair_live, denom, 1.0), 0.0)
    upper = np.triu(np.ones(K.shape[1:], dtype=bool), 1)
    return cos2[:, upper].sum(axis=1)


def cosreg_loss(problem, params, lambda_reg: float = None, level="param") -> float:
    """lambda * sum_{i<j} cos^2(g_i, g_j) at the given parameters."""
    lambda_reg = HYPERPARAMS["cosreg"]["lambda_reg"] if lambda_reg is None else float(lambda_reg)
    grads = _task_gradients_batch(problem, params.W[None], params.V, GradientLevel(level))
    return float(lambda_reg * squared_cosines(grads)[0])


def cosreg_gradient(
    problem, params, lambda_reg: float = None, fd_step: float = None, level="param", **kwargs
) -> np.ndarray:
    """Regularizer: Cosine Similarity Regularization (CosReg)"""
    # Validate Arguments
    defaults = HYPERPARAMS["cosreg"]
    lambda_reg = defaults["lambda_reg"] if lambda_reg is None else float(lambda_reg)
    fd_step = float(fd_step) if fd_step and fd_step > 0 else defaults["fd_step"]
    level = GradientLevel(level)
    stencil = int(kwargs.pop("stencil", 2))
    chunk = int(kwargs.pop("chunk", 32))
    if stencil not in STENCILS:
        raise ValueError(f"[X] stencil must be one of {sorted(STENCILS)}")

    # Calculate Result
    offsets, weights, divisor = STENCILS[stencil]
    W = params.W
    d = W.size
    gradient = np.zeros(d)
    for start in range(0, d, chunk):
        coords = np.arange(start, min(start + chunk, d))
        basis = np.zeros((coords.size, d))
        basis[np.arange(coords.size), coords] = 1.0
        total = np.zeros(coords.size)
        for offset, weight in zip(offsets, weights):
            W_batch = W.reshape(1, d) + offset * fd_step * basis
            grads = _task_gradients_batch(problem, W_batch.reshape(-1, *W.shape), params.V, level)
            total += weight * squared_cosines(grads)
        gradient[coords] = lambda_reg * total / (divisor * fd_step)

    return gradient


cosreg_gradient.__doc__ = """Cosine Similarity Regularization (CosReg)

Penalizes the squared cosine similarity between every pair of task gradients,
pushing the shared weights towards regions where task gradients are
orthogonal. The penalty depends on gradients, so its own gradient with
respect to the shared weights is taken by central finite differences, one
coordinate at a time, evaluated in vectorized chunks.

Calculation:
    Default Inputs:
        lambda_reg=0.1, fd_step=1e-5, stencil=2
    L_reg(W) = lambda * SUM_{i<j} cos^2(g_i(W), g_j(W))
    stencil 2: (L(W + h e_c) - L(W - h e_c)) / (2 h)
    stencil 4: (-L(+2h) + 8 L(+h) - 8 L(-h) + L(-2h)) / (12 h)

Args:
    problem (ToyProblem): Exposes task losses of the shared weights
    params (Params): Point of evaluation
    lambda_reg (float): Penalty weight. Default: 0.1
    fd_step (float): Finite-difference step h. Default: 1e-5
    level (str): Gradients whose cosines are penalized, 'param' or
        'feature'. Default: 'param'

Kwargs:
    stencil (int): 2 or 4 point central difference. Default: 2
    chunk (int): Coordinates evaluated per vectorized batch. Default: 32

Returns:
    np.ndarray: length m * n gradient of L_reg w.r.t. the shared weights
"""


def combine_cosreg(
    grads, problem, params, state: CombinerState = None, lambda_reg: float = None, fd_step: float = None, level="param", **kwargs
) -> CombineResult:
    """Vanilla summed parameter gradient plus the CosReg gradient."""
    grads = verify_gradients(grads)
    state = state or CombinerState.initial("cosreg", grads.T)
    penalty = cosreg_gradient(problem, params, lambda_reg, fd_step, level)
    return CombineResult(
        state=state.advance(),
        direction=UpdateDirection(grads.entries.sum(axis=1) + penalty, GradientLevel.PARAM),
        diagnostics={
            "alpha": np.ones(grads.T),
            "penalty": cosreg_loss(problem, params, lambda_reg, level),
            "category": "regularization",
        },
    )
