# -*- coding: utf-8 -*-
from dataclasses import dataclass
from typing import List, Tuple

from gradlab._meta import HYPERPARAMS
from gradlab._types import *
from gradlab.balancing import *
from gradlab.manipulation import *
from gradlab.monitors import *
from gradlab.regularization import *
from gradlab.utils import *


# Method DataClass
@dataclass(frozen=True)
class MethodSpec:
    """One registered optimization method

    Args:
        name (str): Registry key, also the config/CLI name.
        category (str): 'manipulation', 'balancing', 'regularization' or 'baseline'.
        level_axis (bool): Whether sweeps run it at both gradient levels.
        uses_gradients (bool): Whether the method reads the gradient matrix.
    """

    name: str
    category: str
    level_axis: bool
    uses_gradients: bool = True


MANIPULATION = ("pcgrad", "gradvac", "graddrop", "rgw", "mgda", "cagrad", "nash", "alignedmtl")
BALANCING = ("imtl", "gradnorm", "uncertainty", "rlw", "famo", "dwa")
REGULARIZATION = ("cosreg",)
ROSTER = MANIPULATION + BALANCING + REGULARIZATION
# Balancers driven by losses alone
LOSS_ONLY = ("uncertainty", "rlw", "famo", "dwa")

METHODS = {"baseline": MethodSpec("baseline", "baseline", level_axis=False)}
METHODS.update({name: MethodSpec(name, "manipulation", level_axis=True) for name in MANIPULATION})
METHODS.update(
    {name: MethodSpec(name, "balancing", False, name not in LOSS_ONLY) for name in BALANCING}
)
METHODS["cosreg"] = MethodSpec("cosreg", "regularization", level_axis=True)


def get_method(name: str) -> MethodSpec:
    key = str(name).lower()
    if key not in METHODS:
        raise InvalidMethod(name, METHODS.keys())
    return METHODS[key]


def method_hyperparams(name: str, overrides: dict = None) -> dict:
    """Default hyperparameters of a method updated with any overrides."""
    params = dict(HYPERPARAMS.get(get_method(name).name, {}))
    params.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return params


def applicable_cells(methods, levels) -> List[Tuple[str, GradientLevel]]:
    """(method, level) cells of a sweep; level-free methods appear once at
    parameter level."""
    levels = [GradientLevel(level) for level in levels]
    cells = []
    for name in methods:
        spec = get_method(name)
        if spec.level_axis:
            cells.extend((spec.name, level) for level in levels)
        elif levels:
            cells.append((spec.name, GradientLevel.PARAM))
    return cells


def combine(
    method: str,
    grads,
    losses,
    state: CombinerState,
    rng=None,
    problem=None,
    params=None,
    **hyperparams,
) -> CombineResult:
    """Dispatches one combiner call.

    Args:
        method (str): Registered method name, not 'baseline'.
        grads (TaskGradients): Gradients at the level the method runs on.
        losses (LossVector): Current task losses.
        state (CombinerState): State owned by the calling run.
        rng (np.random.Generator): Stream for the stochastic methods.
        problem, params: Needed by 'cosreg' only.

    Kwargs:
        Method hyperparameters, e.g. c=0.5 for 'cagrad'.

    Returns:
        CombineResult
    """
    name = get_method(method).name
    kw = method_hyperparams(name, hyperparams)

    if name == "pcgrad":
        return combine_pcgrad(grads, state, rng)
    if name == "gradvac":
        return combine_gradvac(grads, state, **kw)
    if name == "graddrop":
        return combine_graddrop(grads, state, rng)
    if name in ("rgw", "rlw"):
        return combine_random_weighting(grads, losses, state, rng, mode=name)
    if name == "mgda":
        return combine_mgda(grads, state, **kw)
    if name == "cagrad":
        return combine_cagrad(grads, state, **kw)
    if name == "nash":
        return combine_nash(grads, state, **kw)
    if name == "alignedmtl":
        return combine_alignedmtl(grads, state, **kw)
    if name == "imtl":
        return combine_imtl(grads, losses, state)
    if name == "gradnorm":
        return weights_gradnorm(grads, losses, state, **kw)
    if name == "uncertainty":
        return weights_uncertainty(losses, state, **kw)
    if name == "famo":
        previous = state.loss_history[-1] if state.loss_history else None
        return weights_famo(previous, losses, state, **kw)
    if name == "dwa":
        return weights_dwa(state, losses=losses, **kw)
    if name == "cosreg":
        if problem is None or params is None:
            raise ValueError("[X] cosreg needs the problem and its parameters")
        level = kw.pop("level", grads.level)
        return combine_cosreg(grads, problem, params, state, level=level, **kw)
    raise InvalidMethod(method, METHODS.keys())
