# -*- coding: utf-8 -*-
# Dynamic Weight Average (DWA)
import numpy as np

from gradlab._meta import HYPERPARAMS
from gradlab._types import CombineResult, CombinerState, GradWeights, WeightConstraint
from gradlab.utils import softmax, verify_losses


def weights_dwa(state: CombinerState, temperature: float = None, losses=None, **kwargs) -> CombineResult:
    """Balancer: Dynamic Weight Average (DWA)"""
    # Validate Arguments
    temperature = float(temperature) if temperature and temperature > 0 else HYPERPARAMS["dwa"]["temperature"]
    T = state.log_weights.shape[0]
    history = state.loss_history

    # Calculate Result
    if len(history) < 2:
        w = np.ones(T)
        rates = np.ones(T)
    else:
        last, before = history[-1].values, history[-2].values
        safe = np.where(before > 1e-12, before, 1.0)
        rates = np.where(before > 1e-12, last / safe, 1.0)
        w = T * softmax(rates / temperature)

    if losses is not None:
        history = (history + (verify_losses(losses, T),))[-2:]

    # Name & Category
    return CombineResult(
        state=state.advance(loss_history=history),
        loss_weights=GradWeights(w, WeightConstraint.SUM_T),
        diagnostics={"weights": w, "rates": rates, "category": "balancing"},
    )


weights_dwa.__doc__ = """Dynamic Weight Average (DWA)

Weights each loss by how slowly it has been descending over the last two
recorded iterations; cold starts use equal weights.

Calculation:
    Default Inputs:
        temperature=2
    r_i = L_i(t-1) / L_i(t-2)             (1 when L_i(t-2) <= 1e-12)
    w_i = T * exp(r_i / temperature) / SUM_k exp(r_k / temperature)
    fewer than two recorded losses: w = 1

Args:
    state (CombinerState): Holds loss_history (last two LossVectors)
    temperature (float): Softmax temperature. Default: 2
    losses (LossVector, optional): Current losses, appended to the history
        after the weights are computed

Returns:
    CombineResult: loss_weights summing to T
"""
