# -*- coding: utf-8 -*-
"""
Planted multi-task regression: a shared layer Z = act(W x) feeds one dense
linear head per task. Only the planted heads are sparse; the overlap of
their supports sets how much the tasks share.
"""
from dataclasses import dataclass
from enum import Enum
from math import ceil

import numpy as np
from numpy import sqrt as npSqrt
from numpy import tanh as npTanh

from gradlab._types import GradientLevel, LossVector, TaskGradients
from gradlab.utils import InfeasibleDisjointSupports


class Activation(str, Enum):
    IDENTITY = "identity"
    TANH = "tanh"

    def apply(self, u: np.ndarray) -> np.ndarray:
        return npTanh(u) if self is Activation.TANH else u

    def derivative(self, u: np.ndarray) -> np.ndarray:
        if self is Activation.TANH:
            return 1.0 - npTanh(u) ** 2
        return np.ones_like(u)


@dataclass(frozen=True, eq=False)
class ToyProblem:
    n: int
    m: int
    T: int
    N: int
    activation: Activation
    X: np.ndarray
    Y: np.ndarray
    W_star: np.ndarray
    V_star: np.ndarray
    supports: np.ndarray
    overlap: float
    noise: float
    seed: int

    @property
    def d(self) -> int:
        return self.m * self.n


@dataclass(frozen=True, eq=False)
class Params:
    """Shared weights W (m x n) and dense task heads V (m x T)."""

    W: np.ndarray
    V: np.ndarray

    def step(self, shared: np.ndarray, heads: np.ndarray, lr: float) -> "Params":
        return Params(self.W - lr * shared.reshape(self.W.shape), self.V - lr * heads)


def plant_supports(m: int, T: int, overlap: float) -> np.ndarray:
    """m x T boolean mask: a common block of round(overlap * size) coordinates
    followed by one private block per task, size = ceil(m / T)."""
    size = ceil(m / T)
    shared = int(round(overlap * size))
    private = min(size - shared, (m - shared) // T)
    if private <= 0 and shared == 0:
        if overlap == 0:
            raise InfeasibleDisjointSupports(m, T)
        shared = 1
    private = max(private, 0)

    supports = np.zeros((m, T), dtype=bool)
    supports[:shared, :] = True
    for i in range(T):
        start = shared + i * private
        supports[start : start + private, i] = True
    return supports


def _planted_heads(rng: np.random.Generator, supports: np.ndarray) -> np.ndarray:
    """Gaussian on the support, unit column norm."""
    heads = rng.standard_normal(supports.shape) * supports
    return heads / np.linalg.norm(heads, axis=0, keepdims=True)


def _orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """rows x cols with orthonormal columns, rows >= cols."""
    Q, R = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)[None, :]


def make_problem(
    seed: int = 0,
    n: int = 16,
    m: int = 32,
    T: int = 2,
    N: int = 256,
    overlap: float = 0.0,
    noise: float = 0.0,
    activation="identity",
) -> ToyProblem:
    """Deterministic planted problem; targets y_i = v*_i^T act(W* x) + noise.

    With N >= n the inputs are whitened (X^T X / N = I) and with m <= n the
    planted extractor has orthonormal rows, so W* is an isometry on the data.
    """
    if min(n, m, N) < 1 or T < 2:
        raise ValueError(f"[X] Need n, m, N >= 1 and T >= 2, got n={n} m={m} N={N} T={T}")
    if not 0.0 <= overlap <= 1.0 or noise < 0:
        raise ValueError(f"[X] Need overlap in [0, 1] and noise >= 0, got {overlap}, {noise}")
    activation = Activation(activation)

    supports = plant_supports(m, T, overlap)
    rng = np.random.default_rng(seed)
    X = npSqrt(N) * _orthonormal(rng, N, n) if N >= n else rng.standard_normal((N, n))
    W_star = _orthonormal(rng, n, m).T if m <= n else rng.standard_normal((m, n)) / npSqrt(n)
    V_star = _planted_heads(rng, supports)
    Y = activation.apply(X @ W_star.T) @ V_star + noise * rng.standard_normal((N, T))

    for array in (X, Y, W_star, V_star, supports):
        array.setflags(write=False)
    return ToyProblem(
        n=n, m=m, T=T, N=N, activation=activation, X=X, Y=Y,
        W_star=W_star, V_star=V_star, supports=supports,
        overlap=float(overlap), noise=float(noise), seed=int(seed),
    )


def planted_params(problem: ToyProblem) -> Params:
    return Params(np.array(problem.W_star), np.array(problem.V_star))


def init_params(problem: ToyProblem, seed: int, start: str = "random", head_scale: float = 1e-4) -> Params:
    """Dense start, independent of the problem stream.

    "random" draws W and the heads at the planted scale. "pretrained" copies
    the planted extractor and starts fresh heads at head_scale.
    """
    rng = np.random.default_rng([int(seed), problem.seed])
    heads = rng.standard_normal((problem.m, problem.T)) / npSqrt(problem.m)
    if start == "random":
        W = rng.standard_normal((problem.m, problem.n)) / npSqrt(problem.n)
        return Params(W, heads)
    if start == "pretrained":
        return Params(np.array(problem.W_star), head_scale * heads)
    raise ValueError(f"[X] Unknown start '{start}', expected 'random' or 'pretrained'")


def forward(problem: ToyProblem, params: Params, shift=None):
    """Pre-activations U, features Z and predictions (N x T).

    shift (length m) is added to every sample's features.
    """
    U = problem.X @ params.W.T
    Z = problem.activation.apply(U)
    if shift is not None:
        Z = Z + np.asarray(shift)[None, :]
    return U, Z, Z @ params.V


def losses(problem: ToyProblem, params: Params, shift=None) -> LossVector:
    """Mean squared error per task."""
    _, _, pred = forward(problem, params, shift)
    return LossVector(np.mean((pred - problem.Y) ** 2, axis=0))


def _residual_scale(problem: ToyProblem, pred: np.ndarray) -> np.ndarray:
    return 2.0 * (pred - problem.Y) / problem.N


def _backprop(problem: ToyProblem, U: np.ndarray, scale: np.ndarray, heads: np.ndarray) -> np.ndarray:
    """sum_k scale_ki * (heads_i * act'(U_k)) x_k^T for every task: (m, n, T)."""
    D = problem.activation.derivative(U)
    return np.einsum("ki,mi,km,kn->mni", scale, heads, D, problem.X, optimize=True)


def grads_param(problem: ToyProblem, params: Params) -> TaskGradients:
    """Column i is dL_i/dW flattened row-major (d = m * n)."""
    U, _, pred = forward(problem, params)
    per_task = _backprop(problem, U, _residual_scale(problem, pred), params.V)
    return TaskGradients(per_task.reshape(problem.d, problem.T), GradientLevel.PARAM)


def grads_feature(problem: ToyProblem, params: Params) -> TaskGradients:
    """Column i is dL_i/dZ for a feature shift shared by the batch (d = m)."""
    _, _, pred = forward(problem, params)
    residual_sum = _residual_scale(problem, pred).sum(axis=0)
    return TaskGradients(params.V * residual_sum[None, :], GradientLevel.FEATURE)


def feature_saliency(problem: ToyProblem, params: Params) -> TaskGradients:
    """Per-sample feature gradients dL_i/dZ_kj, one row per (k, j): d = N * m."""
    _, _, pred = forward(problem, params)
    scale = _residual_scale(problem, pred)
    per_sample = scale[:, None, :] * params.V[None, :, :]
    return TaskGradients(per_sample.reshape(problem.N * problem.m, problem.T), GradientLevel.FEATURE)


def head_grads(problem: ToyProblem, params: Params) -> np.ndarray:
    """dL_i/dv_i as an m x T matrix."""
    _, Z, pred = forward(problem, params)
    return Z.T @ _residual_scale(problem, pred)


def lift_feature_direction(problem: ToyProblem, params: Params, coefficients) -> np.ndarray:
    """Backpropagates sum_i c_i * dL_i/dZ through the representation.

    coefficients is a length-T vector or an m x T mask; all ones gives
    the summed parameter gradient.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.ndim == 1:
        coefficients = np.broadcast_to(coefficients, (problem.m, problem.T))
    U, _, pred = forward(problem, params)
    heads = params.V * coefficients
    per_task = _backprop(problem, U, _residual_scale(problem, pred), heads)
    return per_task.sum(axis=2).reshape(problem.d)
