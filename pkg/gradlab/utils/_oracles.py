# -*- coding: utf-8 -*-
"""
Property checks for the kernels, combiners, metrics and toy gradients on
seeded random instances. Shared by the 'selftest' command and the tests.
"""
from itertools import permutations
from time import perf_counter

import numpy as np
from pandas import DataFrame

from gradlab._types import GradientLevel, Ranking, TaskGradients
from ._core import step_rng
from ._math import gram, jacobi_eigh, trace_identity

TASK_COUNTS = (2, 3, 4, 7)


def _row(check: str, passed: int, failed: int, stime: float, note: str = "") -> dict:
    total = passed + failed
    return {
        "check": check,
        "instances": total,
        "passed": passed,
        "failed": failed,
        "rate": passed / total if total else 1.0,
        "seconds": round(perf_counter() - stime, 3),
        "note": note,
    }


def random_gradients(rng: np.random.Generator, tasks=None, level=GradientLevel.PARAM) -> TaskGradients:
    T = int(tasks or rng.choice(TASK_COUNTS))
    d = int(rng.integers(4, 65))
    return TaskGradients(rng.standard_normal((d, T)), level)


def check_trace_identity(instances: int = 100, seed: int = 0) -> dict:
    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        d, T = int(rng.integers(1, 51)), int(rng.integers(2, 9))
        M, a, b = rng.standard_normal((d, T)), rng.standard_normal(T), rng.standard_normal(T)
        lhs, rhs = trace_identity(M, a, b)
        scale = max(np.linalg.norm(M @ a) * np.linalg.norm(M @ b), 1e-300)
        passed += abs(lhs - rhs) <= 1e-10 * scale
    return _row("trace_identity", passed, instances - passed, stime)


def check_submultiplicative(instances: int = 100, seed: int = 0) -> dict:
    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        d, T = int(rng.integers(1, 51)), int(rng.integers(2, 9))
        M, a = rng.standard_normal((d, T)), rng.standard_normal(T)
        passed += np.linalg.norm(M @ a) <= np.linalg.norm(M) * np.linalg.norm(a) * (1 + 1e-12)
    return _row("submultiplicative", passed, instances - passed, stime)


def check_jacobi(instances: int = 500, seed: int = 0) -> dict:
    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        K = gram(random_gradients(rng)).entries
        lam, V = jacobi_eigh(K)
        recon = np.linalg.norm(V @ np.diag(lam) @ V.T - K)
        ortho = np.abs(V.T @ V - np.eye(K.shape[0])).max()
        passed += recon <= 1e-8 * (1 + np.linalg.norm(K)) and ortho <= 1e-8
    return _row("jacobi_eigh", passed, instances - passed, stime)


def check_pcgrad(instances: int = 500, seed: int = 0) -> dict:
    from gradlab.manipulation import combine_pcgrad

    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for k in range(instances):
        grads = random_gradients(rng, tasks=2)
        G = grads.entries
        coef = combine_pcgrad(grads, rng=step_rng(seed, k)).diagnostics["surgery"]
        g1, g2 = G @ coef[0], G @ coef[1]
        passed += g1 @ G[:, 1] >= -1e-10 and g2 @ G[:, 0] >= -1e-10
    return _row("pcgrad_nonnegative", passed, instances - passed, stime)


def check_gradvac_pcgrad(instances: int = 500, seed: int = 0) -> dict:
    """GradVac with every target at 0 is PCGrad visiting tasks in index order."""
    from gradlab.manipulation import combine_gradvac, combine_pcgrad

    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        grads = random_gradients(rng)
        vac = combine_gradvac(grads).direction.entries
        pc = combine_pcgrad(grads, shuffle=False).direction.entries
        passed += np.linalg.norm(vac - pc) <= 1e-9 * (1 + np.linalg.norm(pc))
    return _row("gradvac_zero_target_pcgrad", passed, instances - passed, stime)


def check_mgda(instances: int = 500, seed: int = 0, samples: int = 1000) -> dict:
    from gradlab.manipulation import combine_mgda

    stime, passed, converged = perf_counter(), 0, 0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        grads = random_gradients(rng)
        G = grads.entries
        result = combine_mgda(grads)
        g = result.direction.entries
        sq = g @ g
        betas = rng.dirichlet(np.ones(grads.T), size=samples)
        best = np.linalg.norm(betas @ G.T, axis=1).min()
        gap = sq - (G.T @ g).min()
        converged += result.diagnostics["converged"]
        passed += np.sqrt(sq) <= best * (1 + 1e-12) and gap <= 1e-6 * (1 + sq)
    return _row("mgda_min_norm", passed, instances - passed, stime, f"converged {converged}/{instances}")


def check_cagrad(instances: int = 500, seed: int = 0) -> dict:
    from gradlab.manipulation import combine_cagrad

    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        grads = random_gradients(rng)
        g0 = grads.entries.mean(axis=1)
        c = float(rng.uniform(0.05, 1.0))
        g = combine_cagrad(grads, c=c).direction.entries
        same = np.array_equal(combine_cagrad(grads, c=0.0).direction.entries, g0)
        passed += np.linalg.norm(g - g0) <= c * np.linalg.norm(g0) * (1 + 1e-6) and same
    return _row("cagrad_constraint", passed, instances - passed, stime)


def check_nash(instances: int = 500, seed: int = 0) -> dict:
    from gradlab.manipulation import combine_nash
    from gradlab.manipulation.nash import nash_residual

    stime, passed, converged = perf_counter(), 0, 0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        grads = random_gradients(rng)
        result = combine_nash(grads)
        alpha = result.diagnostics["alpha"]
        if result.diagnostics["converged"]:
            converged += 1
            K = gram(grads).entries
            passed += nash_residual(K, alpha) <= 1e-6 and np.all(alpha > 0)
        else:
            passed += np.allclose(alpha, 1.0 / grads.T)
    return _row("nash_residual", passed, instances - passed, stime, f"converged {converged}/{instances}")


def check_alignedmtl(instances: int = 500, seed: int = 0) -> dict:
    from gradlab.manipulation import combine_alignedmtl

    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        grads = random_gradients(rng)
        diagnostics = combine_alignedmtl(grads).diagnostics
        lam = diagnostics["eigenvalues"]
        rank = int(np.sum(lam > 1e-9 * lam[0]))
        s = np.linalg.svd(diagnostics["aligned"], compute_uv=False)[:rank]
        passed += (s.max() - s.min()) <= 1e-6 * s.max()
    return _row("alignedmtl_condition", passed, instances - passed, stime)


def check_imtl(instances: int = 500, seed: int = 0) -> dict:
    from gradlab.balancing import combine_imtl

    stime, passed, solved = perf_counter(), 0, 0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        grads = random_gradients(rng)
        result = combine_imtl(grads)
        if not result.diagnostics["converged"]:
            passed += np.allclose(result.diagnostics["alpha"], 1.0 / grads.T)
            continue
        solved += 1
        g = result.direction.entries
        projections = g @ (grads.entries / grads.norms())
        passed += np.abs(projections - projections[0]).max() <= 1e-8 * (1 + np.linalg.norm(g))
    return _row("imtl_equal_projections", passed, instances - passed, stime, f"solved {solved}/{instances}")


def check_weight_sums(instances: int = 500, seed: int = 0) -> dict:
    from gradlab._types import CombinerState, LossVector
    from gradlab.balancing import weights_dwa, weights_gradnorm
    from gradlab.manipulation import combine_random_weighting

    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for k in range(instances):
        grads = random_gradients(rng)
        T = grads.T
        state = CombinerState.initial("gradnorm", T)
        ok = True
        for _ in range(3):
            losses = LossVector(rng.uniform(0.01, 5.0, T))
            result = weights_gradnorm(grads, losses, state, lr_w=float(rng.uniform(0.001, 0.5)))
            state = result.state
            ok &= abs(result.loss_weights.values.sum() - T) <= 1e-9
        dwa_state = CombinerState.initial("dwa", T)
        for _ in range(4):
            result = weights_dwa(dwa_state, losses=LossVector(rng.uniform(0.01, 5.0, T)))
            dwa_state = result.state
            ok &= abs(result.loss_weights.values.sum() - T) <= 1e-9
        w = combine_random_weighting(grads, mode="rgw", rng=step_rng(seed, k)).diagnostics["alpha"]
        ok &= bool(np.all(w >= 0)) and abs(w.sum() - 1.0) <= 1e-9
        passed += ok
    return _row("weight_sums", passed, instances - passed, stime)


def check_graddrop(instances: int = 500, seed: int = 0) -> dict:
    from gradlab.manipulation import combine_graddrop

    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for k in range(instances):
        grads = random_gradients(rng)
        G = grads.entries
        diagnostics = combine_graddrop(grads, rng=step_rng(seed, k)).diagnostics
        mask = diagnostics["alpha"].astype(bool)
        kept_pos = np.where(mask, G > 0, True).all(axis=1)
        kept_neg = np.where(mask, G < 0, True).all(axis=1)
        positive = np.abs(G)
        all_pos = combine_graddrop(TaskGradients(positive), rng=step_rng(seed, k)).direction.entries
        passed += bool(np.all(kept_pos | kept_neg)) and np.array_equal(all_pos, positive.sum(axis=1))
    return _row("graddrop_sign_purity", passed, instances - passed, stime)


def check_metrics(instances: int = 200, seed: int = 0) -> dict:
    from gradlab.monitors import fd_entropy, gds, gms

    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        grads = random_gradients(rng)
        G, T = grads.entries, grads.T
        feature = TaskGradients(G, GradientLevel.FEATURE)
        perm = rng.permutation(T)
        col_scale = rng.uniform(0.1, 10.0, T)
        common = float(rng.uniform(0.1, 10.0))
        row_scale = rng.uniform(0.1, 10.0, (grads.d, 1))
        a, b, f = gds(grads), gms(grads), fd_entropy(feature)
        ok = -1.0 <= a <= 1.0 and 0.0 <= b <= 1.0 and 0.0 <= f <= np.log(T) + 1e-12
        ok &= abs(gds(TaskGradients(G[:, perm])) - a) <= 1e-12
        ok &= abs(gms(TaskGradients(G[:, perm])) - b) <= 1e-12
        ok &= abs(gds(TaskGradients(G * col_scale)) - a) <= 1e-12
        ok &= abs(gms(TaskGradients(G * common)) - b) <= 1e-12
        ok &= abs(fd_entropy(TaskGradients(G * row_scale, GradientLevel.FEATURE)) - f) <= 1e-12
        ok &= abs(fd_entropy(TaskGradients(G[:, perm], GradientLevel.FEATURE)) - f) <= 1e-12
        passed += ok
    return _row("metric_bounds_invariances", passed, instances - passed, stime)


def pair_enumeration_similarity(order_a, order_b) -> float:
    """Independent re-implementation over unordered pairs."""
    pos_a = {x: k for k, x in enumerate(order_a)}
    pos_b = {x: k for k, x in enumerate(order_b)}
    items = list(order_a)
    agree = total = 0
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            x, y = items[i], items[j]
            total += 1
            agree += (pos_a[x] < pos_a[y]) == (pos_b[x] < pos_b[y])
    return agree / total


def check_ranking(max_items: int = 5) -> dict:
    from gradlab.monitors import ranking_similarity

    stime, passed, total = perf_counter(), 0, 0
    for n in range(2, max_items + 1):
        labels = [f"m{k}" for k in range(n)]
        for perm_a in permutations(range(n)):
            first = Ranking(labels, [-p for p in perm_a])
            for perm_b in permutations(range(n)):
                second = Ranking(labels, [-p for p in perm_b])
                raw, converted = ranking_similarity(first, second)
                expected = pair_enumeration_similarity(first.order, second.order)
                reverse = ranking_similarity(second, first)
                total += 1
                passed += (
                    abs(raw - expected) <= 1e-12
                    and 0.5 <= converted <= 1.0
                    and reverse == (raw, converted)
                )
    return _row("ranking_pair_enumeration", passed, total - passed, stime)


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-8))


def check_toy_gradients(instances: int = 50, seed: int = 0, step: float = 1e-5) -> dict:
    from gradlab.toylab import Params, grads_feature, grads_param, init_params, losses, make_problem

    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for k in range(instances):
        T = int(rng.integers(2, 5))
        problem = make_problem(
            seed=k, n=int(rng.integers(2, 7)), m=int(rng.integers(T, 9)), T=T,
            N=int(rng.integers(4, 33)), overlap=float(rng.uniform()),
            noise=0.1, activation=("identity", "tanh")[k % 2],
        )
        params = init_params(problem, k)
        analytic = grads_param(problem, params).entries
        numeric = np.zeros_like(analytic)
        W = params.W.reshape(-1)
        for c in range(W.size):
            bump = np.zeros_like(W)
            bump[c] = step
            up = losses(problem, Params((W + bump).reshape(params.W.shape), params.V)).values
            down = losses(problem, Params((W - bump).reshape(params.W.shape), params.V)).values
            numeric[c] = (up - down) / (2 * step)
        feature = grads_feature(problem, params).entries
        numeric_f = np.zeros_like(feature)
        for j in range(problem.m):
            shift = np.zeros(problem.m)
            shift[j] = step
            numeric_f[j] = (losses(problem, params, shift).values - losses(problem, params, -shift).values) / (2 * step)
        passed += _relative_error(analytic, numeric) < 1e-5 and _relative_error(feature, numeric_f) < 1e-5
    return _row("toy_gradients_fd", passed, instances - passed, stime)


def check_orthogonal_not_disentangled(instances: int = 200, seed: int = 0) -> dict:
    """Orthogonal feature gradients can still share every coordinate (fd > 0),
    while disjoint supports give both zero cosines and fd = 0."""
    from gradlab.monitors import fd_entropy, gds

    stime, passed = perf_counter(), 0
    rng = np.random.default_rng(seed)
    for _ in range(instances):
        T = int(rng.choice(TASK_COUNTS))
        d = int(rng.integers(max(T, 4), 65))
        Q, _ = np.linalg.qr(rng.standard_normal((d, T)))
        dense = TaskGradients(Q, GradientLevel.FEATURE)
        owner = rng.integers(0, T, size=d)
        disjoint = np.where(owner[:, None] == np.arange(T)[None, :], rng.standard_normal((d, T)), 0.0)
        sparse = TaskGradients(disjoint, GradientLevel.FEATURE)
        passed += (
            abs(gds(dense)) <= 1e-12
            and fd_entropy(dense) > 1e-6
            and gds(sparse) == 0.0
            and fd_entropy(sparse) == 0.0
        )
    return _row("orthogonal_not_disentangled", passed, instances - passed, stime)


def check_cosreg_stencil(instances: int = 5, seed: int = 0) -> dict:
    from gradlab.regularization import cosreg_gradient
    from gradlab.toylab import init_params, make_problem

    stime, passed = perf_counter(), 0
    for k in range(instances):
        problem = make_problem(seed=seed + k, n=3, m=4, T=3, N=16, overlap=1.0, noise=0.1, activation="tanh")
        params = init_params(problem, k)
        for level in ("param", "feature"):
            central = cosreg_gradient(problem, params, level=level)
            stencil = cosreg_gradient(problem, params, level=level, fd_step=5e-6, stencil=4)
            passed += _relative_error(central, stencil) <= 1e-4
    return _row("cosreg_fd_stencil", passed, 2 * instances - passed, stime)


def run_oracle_suite(instances: int = 500, seed: int = 0) -> DataFrame:
    """Every oracle check as one DataFrame row."""
    rows = [
        check_trace_identity(100, seed),
        check_submultiplicative(100, seed),
        check_jacobi(instances, seed),
        check_pcgrad(instances, seed),
        check_gradvac_pcgrad(instances, seed),
        check_mgda(instances, seed),
        check_cagrad(instances, seed),
        check_nash(instances, seed),
        check_alignedmtl(instances, seed),
        check_imtl(instances, seed),
        check_weight_sums(instances, seed),
        check_graddrop(instances, seed),
        check_metrics(min(instances, 200), seed),
        check_ranking(5),
        check_toy_gradients(50, seed),
        check_orthogonal_not_disentangled(min(instances, 200), seed),
        check_cosreg_stencil(5, seed),
    ]
    return DataFrame(rows)
