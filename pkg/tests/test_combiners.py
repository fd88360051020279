import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import columns
from gradlab._types import CombinerState, GradientLevel, LossVector, TaskGradients, WeightConstraint
from gradlab.balancing import (
    combine_imtl,
    weights_dwa,
    weights_famo,
    weights_gradnorm,
    weights_uncertainty,
)
from gradlab.balancing.famo import softmax_vjp
from gradlab.core import METHODS, ROSTER, applicable_cells, combine, get_method, method_hyperparams
from gradlab.manipulation import (
    combine_alignedmtl,
    combine_cagrad,
    combine_graddrop,
    combine_gradvac,
    combine_mgda,
    combine_nash,
    combine_pcgrad,
    combine_random_weighting,
)
from gradlab.manipulation.graddrop import graddrop_mask, sign_purity
from gradlab.utils import InvalidMethod, step_rng
from gradlab.utils._oracles import check_gradvac_pcgrad


# PCGrad
@pytest.mark.parametrize(
    "g1, g2, direction",
    [((1, 0), (0, 1), (1, 1)), ((1, 0), (-1, 1), (0.5, 1.5)), ((2, 3), (2, 3), (4, 6))],
)
def test_pcgrad_examples(g1, g2, direction):
    result = combine_pcgrad(columns(g1, g2), rng=np.random.default_rng(0))
    assert_allclose(result.direction.entries, direction, atol=1e-12)
    G = np.array([g1, g2], dtype=float).T
    assert_allclose(G @ result.diagnostics["alpha"], direction, atol=1e-12)


def test_pcgrad_projected_pair():
    coef = combine_pcgrad(columns((1, 0), (-1, 1))).diagnostics["surgery"]
    G = np.array([[1.0, -1.0], [0.0, 1.0]])
    assert_allclose(G @ coef[0], (0.5, 0.5))
    assert_allclose(G @ coef[1], (0.0, 1.0))


def test_pcgrad_same_seed_same_result(rng):
    G = columns(*rng.standard_normal((4, 10)))
    a = combine_pcgrad(G, rng=step_rng(5, 17)).direction.entries
    b = combine_pcgrad(G, rng=step_rng(5, 17)).direction.entries
    assert_array_equal(a, b)


# GradVac
def test_gradvac_zero_target_is_projection():
    result = combine_gradvac(columns((1, 0), (-1, 1)), beta=0.01)
    G = np.array([[1.0, -1.0], [0.0, 1.0]])
    assert_allclose(G @ result.diagnostics["surgery"][0], (0.5, 0.5), atol=1e-12)


def test_gradvac_ema_update():
    g2 = (0.5, np.sqrt(0.75))
    result = combine_gradvac(columns((1, 0), g2), beta=0.01)
    assert result.state.ema_targets[0, 1] == pytest.approx(0.005)
    assert result.state.step_counter == 1


def test_gradvac_orthogonal_unchanged():
    result = combine_gradvac(columns((1, 0), (0, 1)))
    assert_allclose(result.direction.entries, (1, 1))


@pytest.mark.parametrize("tasks", [2, 3, 4, 7])
def test_gradvac_zero_targets_match_ordered_pcgrad(tasks, rng):
    for _ in range(25):
        grads = TaskGradients(rng.standard_normal((int(rng.integers(4, 40)), tasks)), "param")
        vac = combine_gradvac(grads)
        pc = combine_pcgrad(grads, shuffle=False)
        assert_allclose(vac.direction.entries, pc.direction.entries, rtol=1e-9, atol=1e-12)
        assert_allclose(vac.diagnostics["surgery"], pc.diagnostics["surgery"], rtol=1e-9, atol=1e-12)


def test_gradvac_pcgrad_oracle():
    row = check_gradvac_pcgrad(200, seed=3)
    assert row["failed"] == 0


# GradDrop
def test_graddrop_all_positive_rows_are_kept(rng):
    G = np.abs(rng.standard_normal((8, 3))) + 0.1
    result = combine_graddrop(columns(*G.T), rng=rng)
    assert_allclose(result.direction.entries, G.sum(axis=1))


def test_graddrop_mixed_row_is_a_coin_flip():
    G = np.array([[1.0, -1.0]])
    assert sign_purity(G)[0] == pytest.approx(0.5)
    assert_array_equal(graddrop_mask(G, [0.3]), [[True, False]])
    assert_array_equal(graddrop_mask(G, [0.7]), [[False, True]])
    draws = [combine_graddrop(columns((1.0,), (-1.0,)), rng=step_rng(0, k)).direction.entries[0] for k in range(400)]
    assert set(draws) == {1.0, -1.0}
    assert 0.4 < np.mean(np.array(draws) > 0) < 0.6


def test_graddrop_single_task_is_identity():
    G = np.array([[2.0], [-3.0], [0.5]])
    mask = graddrop_mask(G, [0.1, 0.5, 0.99])
    assert_array_equal(np.where(mask, G, 0.0), G)


# RGW / RLW
def test_random_weighting_simplex_and_determinism(rng):
    G = columns(*rng.standard_normal((3, 5)))
    a = combine_random_weighting(G, mode="rgw", rng=step_rng(1, 2))
    b = combine_random_weighting(G, mode="rgw", rng=step_rng(1, 2))
    assert_array_equal(a.diagnostics["alpha"], b.diagnostics["alpha"])
    assert a.diagnostics["alpha"].sum() == pytest.approx(1.0)
    assert np.all(a.diagnostics["alpha"] >= 0)

    rlw = combine_random_weighting(G, mode="rlw", rng=step_rng(1, 2))
    assert rlw.direction is None
    assert rlw.loss_weights.constraint is WeightConstraint.SIMPLEX


def test_random_weighting_rejects_unknown_mode():
    with pytest.raises(ValueError):
        combine_random_weighting(columns((1, 0), (0, 1)), mode="uniform")


# MGDA
@pytest.mark.parametrize(
    "cols, direction",
    [(((1, 0), (0, 1)), (0.5, 0.5)), (((1, 2), (1, 2)), (1, 2)), (((1, 0), (3, 0)), (1, 0))],
)
def test_mgda_examples(cols, direction):
    result = combine_mgda(columns(*cols))
    assert result.diagnostics["converged"]
    assert_allclose(result.direction.entries, direction, atol=1e-8)


# CAGrad
def test_cagrad_zero_radius_is_mean(rng):
    G = columns(*rng.standard_normal((4, 6)))
    assert_array_equal(combine_cagrad(G, c=0.0).direction.entries, G.entries.mean(axis=1))


def test_cagrad_examples():
    assert_allclose(combine_cagrad(columns((1, 0), (0, 1)), c=0.5).direction.entries, (0.75, 0.75), atol=1e-8)
    v = (1.0, -2.0, 0.5)
    assert_allclose(combine_cagrad(columns(v, v), c=0.4).direction.entries, 1.4 * np.array(v), atol=1e-8)


def test_cagrad_stays_in_trust_region(rng):
    for _ in range(20):
        G = columns(*rng.standard_normal((3, 12)))
        g0 = G.entries.mean(axis=1)
        g = combine_cagrad(G, c=0.7).direction.entries
        assert np.linalg.norm(g - g0) <= 0.7 * np.linalg.norm(g0) * (1 + 1e-6)


# Nash-MTL
def test_nash_examples():
    result = combine_nash(columns((1, 0), (0, 1)))
    assert_allclose(result.diagnostics["alpha"], (1, 1), atol=1e-6)
    assert_allclose(result.direction.entries, (1, 1), atol=1e-6)

    result = combine_nash(columns((2, 0), (0, 1)))
    assert_allclose(result.diagnostics["alpha"], (0.5, 1.0), atol=1e-6)

    n = 3.0
    result = combine_nash(columns((n, 0), (n, 0)))
    assert result.diagnostics["converged"]
    assert_allclose(result.diagnostics["alpha"], [1 / (n * np.sqrt(2))] * 2, atol=1e-6)


def test_nash_fallback_is_flagged():
    result = combine_nash(columns((1, 0), (-1, 0)), max_iters=5)
    assert not result.diagnostics["converged"]
    assert_allclose(result.diagnostics["alpha"], (0.5, 0.5))


# Aligned-MTL
def test_alignedmtl_examples():
    result = combine_alignedmtl(columns((1, 0), (0, 1)))
    assert_allclose(result.direction.entries, (1, 1), atol=1e-10)

    result = combine_alignedmtl(columns((2, 0), (0, 1)))
    assert_allclose(result.diagnostics["aligned"], np.eye(2), atol=1e-10)
    assert_allclose(result.direction.entries, (1, 1), atol=1e-10)

    v = np.array([1.0, 2.0, -1.0])
    d = combine_alignedmtl(columns(v, v)).direction.entries
    assert abs(d @ v) == pytest.approx(np.linalg.norm(d) * np.linalg.norm(v))


def test_alignedmtl_zero_gradients_are_degenerate():
    result = combine_alignedmtl(columns((0, 0), (0, 0)))
    assert result.diagnostics["degenerate"]
    assert_array_equal(result.direction.entries, (0, 0))


# IMTL-G
def test_imtl_examples():
    result = combine_imtl(columns((2, 0), (0, 1)))
    assert_allclose(result.diagnostics["alpha"], (1 / 3, 2 / 3), atol=1e-12)
    assert_allclose(result.direction.entries, (2 / 3, 2 / 3), atol=1e-12)
    assert_allclose(combine_imtl(columns((1, 0), (0, 1))).diagnostics["alpha"], (0.5, 0.5))

    result = combine_imtl(columns((1, 1), (1, 1)))
    assert result.diagnostics["degenerate"]
    assert_allclose(result.direction.entries, (1, 1))


# GradNorm
def test_gradnorm_balanced_fixed_point():
    state = CombinerState.initial("gradnorm", 2)
    result = weights_gradnorm(columns((1, 0), (0, 1)), LossVector([1.0, 1.0]), state)
    assert_allclose(result.loss_weights.values, (1, 1))
    assert result.state.initial_losses is not None


def test_gradnorm_shifts_weight_to_the_weaker_task():
    state = CombinerState.initial("gradnorm", 2)
    result = weights_gradnorm(columns((2, 0), (0, 1)), LossVector([1.0, 1.0]), state, lr_w=0.025)
    w = result.loss_weights.values
    assert w[0] < 1 < w[1]
    assert w.sum() == pytest.approx(2.0, abs=1e-9)


# DWA
def test_dwa_cold_start_and_rates():
    state = CombinerState.initial("dwa", 2)
    for _ in range(2):
        result = weights_dwa(state, losses=LossVector([1.0, 1.0]))
        assert_allclose(result.loss_weights.values, (1, 1))
        state = result.state
    assert_allclose(weights_dwa(state).loss_weights.values, (1, 1))

    state = CombinerState.initial("dwa", 2)
    for losses in ([1.0, 1.0], [2.0, 1.0]):
        state = weights_dwa(state, losses=LossVector(losses)).state
    assert_allclose(weights_dwa(state, temperature=2.0).loss_weights.values, (1.2449, 0.7551), atol=1e-4)


# Uncertainty
def test_uncertainty_examples():
    state = CombinerState.initial("uncertainty", 2)
    result = weights_uncertainty(LossVector([1.0, 1.0]), state)
    assert_allclose(result.diagnostics["s_gradient"], (0, 0))
    result = weights_uncertainty(LossVector([2.0, 1.0]), state, lr_s=0.1)
    assert_allclose(result.diagnostics["s_gradient"], (-1, 0))
    assert np.all(result.loss_weights.values > 0)
    assert result.state.log_variances[0] == pytest.approx(0.1)


# FAMO
def test_famo_examples():
    state = CombinerState.initial("famo", 2)
    result = weights_famo(None, LossVector([1.0, 1.0]), state)
    assert_allclose(result.diagnostics["softmax"], (0.5, 0.5))
    assert_allclose(result.loss_weights.values, (0.5, 0.5))

    assert_allclose(softmax_vjp(np.array([0.3, -0.2, 1.0]), np.full(3, 0.7)), 0, atol=1e-15)
    result = weights_famo(LossVector([2.0, 2.0]), LossVector([1.0, 1.0]), state)
    assert_allclose(result.state.log_weights, 0, atol=1e-15)


def test_famo_moves_weight_to_the_slower_task():
    state = CombinerState.initial("famo", 2)
    result = weights_famo(LossVector([1.0, 1.0]), LossVector([0.5, 1.0]), state, lr_xi=0.5)
    w = result.diagnostics["softmax"]
    assert w[1] > w[0]


def test_famo_logit_step_descends_on_improvement():
    state = CombinerState.initial("famo", 2)
    result = weights_famo(LossVector([1.0, 1.0]), LossVector([0.5, 0.9]), state, lr_xi=0.025)
    delta = np.log([1.0, 1.0]) - np.log([0.5, 0.9])
    expected = -0.025 * 0.25 * np.array([delta[0] - delta[1], delta[1] - delta[0]])
    assert_allclose(result.state.log_weights, expected, rtol=1e-6)
    assert result.state.log_weights[0] < 0 < result.state.log_weights[1]


# Registry
def test_registry_roster():
    assert len(ROSTER) == 15
    assert "baseline" in METHODS
    assert get_method("PCGrad").name == "pcgrad"
    with pytest.raises(InvalidMethod, match="Registered"):
        get_method("foo")


def test_applicable_cells_count():
    cells = applicable_cells(ROSTER, ["param", "feature"])
    assert len(cells) == 24
    assert ("gradnorm", GradientLevel.PARAM) in cells
    assert ("gradnorm", GradientLevel.FEATURE) not in cells
    assert ("cosreg", GradientLevel.FEATURE) in cells
    assert applicable_cells(ROSTER, []) == []


def test_method_hyperparams_override():
    assert method_hyperparams("cagrad", {"c": 0.5})["c"] == 0.5
    assert method_hyperparams("cagrad")["c"] == 0.4


@pytest.mark.parametrize("method", [m for m in ROSTER if m != "cosreg"])
def test_combine_dispatch(method, rng):
    G = columns(*rng.standard_normal((3, 6)))
    state = CombinerState.initial(method, 3)
    result = combine(method, G, LossVector([1.0, 2.0, 0.5]), state, step_rng(0, 0))
    assert result.state.step_counter == 1
    assert result.direction is not None or result.loss_weights is not None
