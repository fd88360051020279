# -*- coding: utf-8 -*-
class GradLabError(Exception):
    """Base class for every error raised by gradlab."""


class SingularSystem(GradLabError):
    def __init__(self, pivot: float, threshold: float):
        self.pivot = pivot
        self.threshold = threshold
        super().__init__(
            f"[X] Singular system: pivot {pivot:.3e} below {threshold:.3e}"
        )


class WrongGradientLevel(GradLabError):
    def __init__(self, expected, received):
        self.expected = expected
        self.received = received
        super().__init__(f"[X] Expected {expected} gradients, received {received}")


class EmptyTrajectory(GradLabError):
    def __init__(self, label: str = ""):
        super().__init__(f"[X] Trajectory {label!r} has no snapshots")


class ItemSetMismatch(GradLabError):
    def __init__(self, left, right):
        self.only_left = sorted(set(left) - set(right))
        self.only_right = sorted(set(right) - set(left))
        super().__init__(
            f"[X] Rankings cover different items: {self.only_left} vs {self.only_right}"
        )


class InfeasibleDisjointSupports(GradLabError):
    def __init__(self, feature_dim: int, tasks: int):
        super().__init__(
            f"[X] Cannot plant {tasks} disjoint supports in {feature_dim} features"
        )


class DivergenceDetected(GradLabError):
    def __init__(self, iteration: int, seed=None):
        self.iteration = iteration
        self.seed = seed
        where = f"seed {seed}, " if seed is not None else ""
        super().__init__(f"[X] Non-finite loss ({where}iteration {iteration})")


class InvalidMethod(GradLabError):
    def __init__(self, name: str, registered):
        self.name = name
        self.registered = list(registered)
        super().__init__(
            f"[X] Unknown method {name!r}. Registered: {', '.join(self.registered)}"
        )


class InvalidConfig(GradLabError):
    pass


class InsufficientCells(GradLabError):
    def __init__(self, found: int, needed: int = 2):
        self.found = found
        super().__init__(f"[X] Rankings need at least {needed} completed cells, found {found}")
