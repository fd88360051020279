# -*- coding: utf-8 -*-
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim != ndim:
        raise ValueError(f"[X] {name} must be {ndim}-D, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"[X] {name} has non-finite entries")
    array.setflags(write=False)
    return array


class GradientLevel(str, Enum):
    PARAM = "param"
    FEATURE = "feature"


class WeightConstraint(str, Enum):
    UNCONSTRAINED = "unconstrained"
    SIMPLEX = "simplex"
    SUM_T = "sum_t"
    POSITIVE = "positive"


@dataclass(frozen=True, eq=False)
class TaskGradients:
    """Per-task gradient matrix G (d x T), column i is the gradient of task i."""

    entries: np.ndarray
    level: GradientLevel = GradientLevel.PARAM

    def __post_init__(self):
        entries = _frozen_array(self.entries, 2, "TaskGradients")
        if entries.shape[0] < 1 or entries.shape[1] < 2:
            raise ValueError(f"[X] TaskGradients needs d >= 1 and T >= 2, got {entries.shape}")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "level", GradientLevel(self.level))

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def T(self) -> int:
        return self.entries.shape[1]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.entries, axis=0)


@dataclass(frozen=True, eq=False)
class LossVector:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, 1, "LossVector"))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    def total(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True, eq=False)
class GradWeights:
    values: np.ndarray
    constraint: WeightConstraint = WeightConstraint.UNCONSTRAINED

    def __post_init__(self):
        values = _frozen_array(self.values, 1, "GradWeights")
        constraint = WeightConstraint(self.constraint)
        T = values.shape[0]
        if constraint is WeightConstraint.SIMPLEX:
            if np.any(values < 0) or abs(values.sum() - 1.0) > 1e-9:
                raise ValueError(f"[X] Weights {values} are not in the simplex")
        elif constraint is WeightConstraint.SUM_T:
            if abs(values.sum() - T) > 1e-9:
                raise ValueError(f"[X] Weights {values} do not sum to {T}")
        elif constraint is WeightConstraint.POSITIVE:
            if np.any(values <= 0):
                raise ValueError(f"[X] Weights {values} are not all positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "constraint", constraint)


@dataclass(frozen=True, eq=False)
class UpdateDirection:
    entries: np.ndarray
    level: GradientLevel = GradientLevel.PARAM

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen_array(self.entries, 1, "UpdateDirection"))
        object.__setattr__(self, "level", GradientLevel(self.level))


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen_array(self.entries, 2, "GramMatrix")
        if entries.shape[0] != entries.shape[1]:
            raise ValueError(f"[X] GramMatrix must be square, got {entries.shape}")
        scale = 1.0 + np.abs(entries).max()
        if np.abs(entries - entries.T).max() > 1e-9 * scale:
            raise ValueError("[X] GramMatrix is not symmetric")
        object.__setattr__(self, "entries", entries)

    @property
    def T(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class CombinerState:
    """Persistent per-run state of a combiner. Transitions return new values."""

    method: str
    ema_targets: np.ndarray
    balancer_weights: GradWeights
    log_weights: np.ndarray
    log_variances: np.ndarray
    initial_losses: Optional[LossVector] = None
    loss_history: Tuple[LossVector, ...] = ()
    rng_seed: int = 0
    step_counter: int = 0

    @classmethod
    def initial(cls, method: str, tasks: int, rng_seed: int = 0) -> "CombinerState":
        return cls(
            method=method,
            ema_targets=np.zeros((tasks, tasks)),
            balancer_weights=GradWeights(np.ones(tasks), WeightConstraint.SUM_T),
            log_weights=np.zeros(tasks),
            log_variances=np.zeros(tasks),
            rng_seed=int(rng_seed),
        )

    def __post_init__(self):
        if np.any(np.abs(self.ema_targets) > 1.0):
            raise ValueError("[X] ema_targets must lie in [-1, 1]")
        if self.step_counter < 0:
            raise ValueError("[X] step_counter must be >= 0")

    def advance(self, **changes) -> "CombinerState":
        """Returns the successor state with step_counter + 1."""
        return replace(self, step_counter=self.step_counter + 1, **changes)


@dataclass(frozen=True, eq=False)
class CombineResult:
    state: CombinerState
    direction: Optional[UpdateDirection] = None
    loss_weights: Optional[GradWeights] = None
    diagnostics: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.direction is None and self.loss_weights is None:
            raise ValueError("[X] CombineResult needs a direction or loss weights")


@dataclass(frozen=True, eq=False)
class InterferenceSnapshot:
    iteration: int
    gds: float
    gms: float
    fd: float
    losses: LossVector
    applied_weights: Optional[GradWeights] = None
    fd_degenerate: bool = False

    def to_record(self) -> dict:
        weights = None
        if self.applied_weights is not None:
            weights = [float(x) for x in self.applied_weights.values]
        return {
            "iter": int(self.iteration),
            "losses": [float(x) for x in self.losses.values],
            "gds": float(self.gds),
            "gms": float(self.gms),
            "fd": float(self.fd),
            "fd_degenerate": bool(self.fd_degenerate),
            "weights": weights,
        }

    @classmethod
    def from_record(cls, record: dict) -> "InterferenceSnapshot":
        weights = record.get("weights")
        return cls(
            iteration=int(record["iter"]),
            gds=float(record["gds"]),
            gms=float(record["gms"]),
            fd=float(record["fd"]),
            losses=LossVector(record["losses"]),
            applied_weights=GradWeights(weights) if weights is not None else None,
            fd_degenerate=bool(record.get("fd_degenerate", False)),
        )


@dataclass(eq=False)
class Trajectory:
    """Snapshots of one run. Appended to by exactly one run."""

    method: str
    level: GradientLevel
    seed: int
    cadence: int = 10
    snapshots: List[InterferenceSnapshot] = field(default_factory=list)
    loss_curve: List[LossVector] = field(default_factory=list)
    final_losses: Optional[LossVector] = None

    def append(self, snapshot: InterferenceSnapshot):
        if self.snapshots and snapshot.iteration <= self.snapshots[-1].iteration:
            raise ValueError(
                f"[X] Snapshot iteration {snapshot.iteration} is not increasing"
            )
        self.snapshots.append(snapshot)

    def field_values(self, name: str, skip_degenerate: bool = False) -> List[float]:
        """Snapshot values of 'name'. With skip_degenerate, fd values from
        snapshots where every location was excluded are dropped unless that
        would leave nothing."""
        snapshots = self.snapshots
        if skip_degenerate and name == "fd":
            live = [s for s in snapshots if not s.fd_degenerate]
            snapshots = live or snapshots
        if name == "total_loss":
            return [s.losses.total() for s in snapshots]
        return [float(getattr(s, name)) for s in snapshots]

    @property
    def label(self) -> str:
        return method_label(self.method, self.level)


def method_label(method: str, level) -> str:
    """'pcgrad' for parameter level, '(rep) pcgrad' for feature level."""
    if GradientLevel(level) is GradientLevel.FEATURE:
        return f"(rep) {method}"
    return method


@dataclass(frozen=True, eq=False)
class Ranking:
    items: Tuple[str, ...]
    scores: Tuple[float, ...]

    def __post_init__(self):
        items = tuple(str(x) for x in self.items)
        scores = tuple(float(x) for x in self.scores)
        if len(items) != len(scores):
            raise ValueError("[X] Ranking needs one score per item")
        if len(set(items)) != len(items):
            raise ValueError("[X] Ranking items must be unique")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "scores", scores)

    @property
    def order(self) -> Tuple[str, ...]:
        """Items by descending score, ties broken by label."""
        pairs = sorted(zip(self.items, self.scores), key=lambda p: (-p[1], p[0]))
        return tuple(item for item, _ in pairs)

    def positions(self) -> Dict[str, int]:
        return {item: k for k, item in enumerate(self.order)}
