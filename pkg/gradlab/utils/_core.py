# -*- coding: utf-8 -*-
import numpy as np
from numpy import exp as npExp

from gradlab._types import GradientLevel, LossVector, TaskGradients


def verify_gradients(grads, level=None) -> TaskGradients:
    """Returns TaskGradients from a TaskGradients or a d x T array."""
    if isinstance(grads, TaskGradients):
        return grads
    return TaskGradients(np.asarray(grads, dtype=float), level or GradientLevel.PARAM)


def verify_losses(losses, tasks: int = None) -> LossVector:
    """Returns a LossVector, checking its length against the task count."""
    losses = losses if isinstance(losses, LossVector) else LossVector(losses)
    if tasks is not None and losses.T != tasks:
        raise ValueError(f"[X] Expected {tasks} losses, got {losses.T}")
    return losses


def get_rng(rng=None) -> np.random.Generator:
    """Returns a numpy Generator; ints and None are used as seeds."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def step_rng(seed: int, step: int) -> np.random.Generator:
    """Independent stream for (seed, step); reproducible without carried state."""
    return np.random.default_rng([int(seed), int(step)])


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    e = npExp(z - z.max())
    return e / e.sum()


def safe_norms(matrix: np.ndarray, zero: float = 1e-12):
    """Column norms and a mask of columns treated as zero."""
    norms = np.linalg.norm(matrix, axis=0)
    return norms, norms < zero
