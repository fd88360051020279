# -*- coding: utf-8 -*-
import logging
from typing import Tuple

import numpy as np
from numpy import abs as npAbs
from numpy import sqrt as npSqrt
from numpy import triu

from gradlab._meta import DEFAULTS
from gradlab._types import (
    GradWeights,
    GramMatrix,
    TaskGradients,
    UpdateDirection,
    WeightConstraint,
)
from ._core import verify_gradients
from ._exceptions import SingularSystem

logger = logging.getLogger(__name__)


def gram(grads) -> GramMatrix:
    """Gram matrix K = G^T G of the task gradients.

    >>> K = gram(TaskGradients([[2.0, 0.0], [0.0, 1.0]]))
    """
    entries = verify_gradients(grads).entries
    K = entries.T @ entries
    # Mirror the upper triangle so K is symmetric to the bit.
    K = triu(K) + triu(K, 1).T
    return GramMatrix(K)


def simplex_project(y) -> GradWeights:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, y.size + 1)
    rho = k[u - (css - 1.0) / k > 0][-1]
    tau = (css[rho - 1] - 1.0) / rho
    return GradWeights(np.maximum(y - tau, 0.0), WeightConstraint.SIMPLEX)


def _face_minimizer(K: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Exact minimum of a^T K a over the face spanned by the support of alpha.

    Returns alpha unchanged when the affine minimizer leaves the face.
    """
    support = np.flatnonzero(alpha > 1e-12)
    if support.size < 2:
        return alpha
    n = support.size
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = K[np.ix_(support, support)]
    kkt[:n, n] = 1.0
    kkt[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    beta = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:n]
    if np.any(beta < -1e-12) or not np.all(np.isfinite(beta)):
        return alpha
    beta = np.clip(beta, 0.0, None)
    beta /= beta.sum()
    candidate = np.zeros_like(alpha)
    candidate[support] = beta
    if candidate @ K @ candidate <= alpha @ K @ alpha:
        return candidate
    return alpha


def min_norm_point(
    grads, max_iters: int = None, tol: float = None
) -> Tuple[GradWeights, UpdateDirection, bool]:
    """Min-norm point of the convex hull of the task gradients.

    Frank-Wolfe with the analytic line search between the current point and
    the best vertex, followed by an exact minimization over the active face.
    Starts from the uniform weighting, so degenerate hulls return it.

    Returns:
        (alpha, direction, converged)
    """
    grads = verify_gradients(grads)
    max_iters = int(max_iters) if max_iters and max_iters > 0 else DEFAULTS["max_iters"]
    tol = float(tol) if tol and tol > 0 else DEFAULTS["tol"]

    K = gram(grads).entries
    T = grads.T
    alpha = np.full(T, 1.0 / T)
    converged = False

    for _ in range(max_iters):
        Ka = K @ alpha
        uu = alpha @ Ka
        t = int(np.argmin(Ka))
        if uu - Ka[t] <= tol * (1.0 + uu):
            converged = True
            break

        ut, tt = Ka[t], K[t, t]
        denom = uu - 2.0 * ut + tt
        gamma = 1.0 if denom <= 0 else min(max((uu - ut) / denom, 0.0), 1.0)
        alpha = (1.0 - gamma) * alpha
        alpha[t] += gamma
        alpha = _face_minimizer(K, alpha)
    else:
        Ka = K @ alpha
        uu = alpha @ Ka
        converged = bool(uu - Ka.min() <= tol * (1.0 + uu))
        if not converged:
            logger.debug(f"[i] Frank-Wolfe stopped after {max_iters} iterations")

    alpha = GradWeights(alpha / alpha.sum(), WeightConstraint.SIMPLEX)
    direction = UpdateDirection(grads.entries @ alpha.values, grads.level)
    return alpha, direction, converged


def _off_diagonal(A: np.ndarray) -> float:
    return float(np.linalg.norm(A - np.diag(np.diag(A))))


def jacobi_eigh(K, tol: float = None, max_sweeps: int = 100):
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Sweeps until the off-diagonal Frobenius residual is within tol of
    ||K||_F, then polishes with two more sweeps.

    Returns:
        (eigenvalues descending, orthonormal eigenvectors as columns)
    """
    A = np.array(K.entries if isinstance(K, GramMatrix) else K, dtype=float)
    tol = float(tol) if tol and tol > 0 else DEFAULTS["tol"]
    T = A.shape[0]
    V = np.eye(T)
    scale = float(np.linalg.norm(A))
    polish = 2

    for _ in range(max_sweeps):
        residual = _off_diagonal(A)
        if residual <= tol * scale:
            if polish == 0 or residual == 0.0:
                break
            polish -= 1

        for p in range(T - 1):
            for q in range(p + 1, T):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    sign = 1.0 if theta >= 0 else -1.0
                    t = sign / (abs(theta) + npSqrt(theta * theta + 1.0))
                c = 1.0 / npSqrt(t * t + 1.0)
                s = t * c

                J = np.eye(T)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
                A[p, q] = A[q, p] = 0.0
                V = V @ J

    eigenvalues = np.diag(A).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], V[:, order]


def solve_linear(A, b) -> np.ndarray:
    """Gaussian elimination with partial pivoting.

    Raises SingularSystem when a pivot falls below 1e-12 * ||A||_inf.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError(f"[X] Shapes {A.shape} and {b.shape} do not form a square system")

    norm_inf = float(npAbs(A).sum(axis=1).max()) if n else 0.0
    threshold = DEFAULTS["pivot_tol"] * norm_inf

    for k in range(n):
        p = k + int(np.argmax(npAbs(A[k:, k])))
        if norm_inf == 0.0 or abs(A[p, k]) < threshold:
            raise SingularSystem(abs(A[p, k]), threshold)
        if p != k:
            A[[k, p]] = A[[p, k]]
            b[[k, p]] = b[[p, k]]
        factors = A[k + 1 :, k] / A[k, k]
        A[k + 1 :, k:] -= np.outer(factors, A[k, k:])
        b[k + 1 :] -= factors * b[k]

    x = np.zeros(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - A[k, k + 1 :] @ x[k + 1 :]) / A[k, k]
    return x


def trace_identity(M, a, b) -> Tuple[float, float]:
    """Both sides of <Ma, Mb> = sum((M^T M) * outer(a, b))."""
    M = np.asarray(M, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lhs = float((M @ a) @ (M @ b))
    rhs = float(np.sum((M.T @ M) * np.outer(a, b)))
    return lhs, rhs
