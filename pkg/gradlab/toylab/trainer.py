# -*- coding: utf-8 -*-
"""
Plain gradient descent on a ToyProblem hosting one combiner and the
interference monitors.
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from gradlab._meta import DEFAULTS
from gradlab._types import (
    CombinerState,
    GradientLevel,
    GradWeights,
    InterferenceSnapshot,
    Trajectory,
)
from gradlab.core import combine, get_method
from gradlab.monitors import fd_entropy, gds, gms
from gradlab.utils import DivergenceDetected, step_rng
from .problem import (
    Params,
    ToyProblem,
    feature_saliency,
    grads_feature,
    grads_param,
    head_grads,
    init_params,
    lift_feature_direction,
    losses,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrainState:
    """Parameters plus combiner state; the rng stream of step t is (seed, t)."""

    params: Params
    combiner: CombinerState
    iteration: int = 0
    lr: float = DEFAULTS["lr"]
    seed: int = 0

    @classmethod
    def initial(cls, problem: ToyProblem, method: str, seed: int, lr: float = None, start: str = None) -> "TrainState":
        start = start or DEFAULTS["start"]
        return cls(
            params=init_params(problem, seed, start, DEFAULTS["head_scale"]),
            combiner=CombinerState.initial(get_method(method).name, problem.T, seed),
            iteration=0,
            lr=float(lr) if lr else DEFAULTS["lr"],
            seed=int(seed),
        )


def _applied_weights(result) -> Optional[GradWeights]:
    if result is None:
        return None
    if result.loss_weights is not None:
        return result.loss_weights
    alpha = result.diagnostics.get("alpha")
    if alpha is not None and np.ndim(alpha) == 1:
        return GradWeights(alpha)
    return None


def _checked(values: np.ndarray, state: TrainState) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise DivergenceDetected(state.iteration, state.seed)
    return values


def _safe_losses(problem: ToyProblem, params: Params, iteration: int, seed: int):
    try:
        return losses(problem, params)
    except ValueError as e:
        raise DivergenceDetected(iteration, seed) from e


def train_step(
    problem: ToyProblem,
    state: TrainState,
    method: str,
    level="param",
    hyperparams: dict = None,
    cadence: int = None,
    monitor: bool = True,
) -> Tuple[TrainState, Optional[InterferenceSnapshot]]:
    """One descent step.

    The shared weights follow the combiner direction (lifted through the
    representation when it was computed on feature gradients) or the
    loss-weighted gradient sum. Heads follow their own task gradients,
    scaled by loss weights when the method emits them.
    """
    method = get_method(method).name
    level = GradientLevel(level)
    cadence = int(cadence) if cadence and cadence > 0 else DEFAULTS["cadence"]
    hyperparams = dict(hyperparams or {})
    params = state.params

    current = _safe_losses(problem, params, state.iteration, state.seed)
    try:
        Gp = grads_param(problem, params)
        Gf = grads_feature(problem, params)
    except ValueError as e:
        raise DivergenceDetected(state.iteration, state.seed) from e
    heads = _checked(head_grads(problem, params), state)

    result = None
    combiner = state.combiner
    if method == "baseline":
        shared = Gp.entries.sum(axis=1)
    else:
        if method == "uncertainty":
            hyperparams.setdefault("lr_s", state.lr)
        if method == "cosreg":
            hyperparams["level"] = level
        grads = Gp if level is GradientLevel.PARAM or method == "cosreg" else Gf
        result = combine(
            method,
            grads,
            current,
            combiner,
            step_rng(state.seed, state.iteration),
            problem=problem,
            params=params,
            **hyperparams,
        )
        combiner = result.state
        if result.direction is not None:
            direction = result.direction
            if direction.level is GradientLevel.FEATURE:
                shared = lift_feature_direction(problem, params, result.diagnostics["alpha"])
            else:
                shared = direction.entries
        else:
            shared = Gp.entries @ result.loss_weights.values
        if result.loss_weights is not None:
            heads = heads * result.loss_weights.values[None, :]

    snapshot = None
    if monitor and state.iteration % cadence == 0:
        fd, degenerate = fd_entropy(feature_saliency(problem, params), flag=True)
        snapshot = InterferenceSnapshot(
            iteration=state.iteration,
            gds=gds(Gp),
            gms=gms(Gp),
            fd=fd,
            losses=current,
            applied_weights=_applied_weights(result),
            fd_degenerate=degenerate,
        )

    next_state = replace(
        state,
        params=params.step(_checked(shared, state), heads, state.lr),
        combiner=combiner,
        iteration=state.iteration + 1,
    )
    return next_state, snapshot


def train_run(
    problem: ToyProblem,
    method: str,
    level="param",
    iters: int = 500,
    seed: int = 0,
    hyperparams: dict = None,
    cadence: int = None,
    lr: float = None,
    monitor: bool = True,
    start: str = None,
) -> Trajectory:
    """Runs 'iters' steps from the seeded start; losses before every step go to
    loss_curve, snapshots every 'cadence' steps, and final_losses after the last.

    start is "random" or "pretrained" (shared layer at the planted extractor,
    fresh heads near zero)."""
    if iters < 1:
        raise ValueError(f"[X] iters must be >= 1, got {iters}")
    cadence = int(cadence) if cadence and cadence > 0 else DEFAULTS["cadence"]
    state = TrainState.initial(problem, method, seed, lr, start)
    traj = Trajectory(method=get_method(method).name, level=GradientLevel(level), seed=int(seed), cadence=cadence)

    for _ in range(iters):
        traj.loss_curve.append(_safe_losses(problem, state.params, state.iteration, state.seed))
        state, snapshot = train_step(problem, state, method, level, hyperparams, cadence, monitor)
        if snapshot is not None:
            traj.append(snapshot)

    final = _safe_losses(problem, state.params, state.iteration, state.seed)
    traj.final_losses = final
    logger.debug(f"[i] {traj.label} seed {seed}: final total loss {final.total():.6g}")
    return traj
