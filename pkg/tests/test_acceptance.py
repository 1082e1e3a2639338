"""Acceptance suite: one test per release criterion.

Each test prints a single `[criterion N] PASS/FAIL` line (run pytest
with -s to see them on success) and enforces the criterion's runtime
budget on this machine.
"""

import functools
import math
import os
import time

import numpy as np
import pytest

import topchoice as tc
from topchoice.bounds import luce_constants, cramer_rao_uniform, mse_upper_bound
from topchoice.choice import slope_quadrature, slope_representations
from topchoice.estimators import _compress, _eval_nll
from topchoice.experiments import ExperimentSpec, run_mse_vs_k

GUMBEL = tc.NoiseModel.gumbel(1.0)
ALL_MODELS = [
    tc.NoiseModel.gaussian(1.0),
    tc.NoiseModel.gumbel(1.0),
    tc.NoiseModel.laplace(1.0),
    tc.NoiseModel.uniform(1.0),
]

N_WORKERS = min(8, os.cpu_count() or 1)


def criterion(number, description, budget_s):
    """Print the one-line verdict for a criterion body, pass or fail.

    Budget violations fail the test even when the assertions passed.
    """

    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kw):
            t0 = time.perf_counter()
            failed = None
            try:
                return fn(*args, **kw)
            except BaseException as exc:
                failed = exc
                raise
            finally:
                elapsed = time.perf_counter() - t0
                over = elapsed >= budget_s
                status = "PASS" if (failed is None and not over) else "FAIL"
                print(
                    f"[criterion {number}] {status} "
                    f"({elapsed:.1f}s, budget {budget_s:.0f}s) - {description}"
                )
                if failed is None and over:
                    raise AssertionError(
                        f"criterion {number} exceeded its runtime budget: "
                        f"{elapsed:.1f}s >= {budget_s:.0f}s"
                    )

        return wrapper

    return deco


def random_zero_sum(rng, n, b):
    th = rng.uniform(-b, b, n)
    th -= th.mean()
    peak = float(np.max(np.abs(th)))
    if peak > b:  # rescale, not clip: keeps the zero sum intact
        th *= b / peak
    return tc.ParamVector(th, b)


@criterion(1, "per-cardinality constants: closed forms vs quadrature", 5.0)
def test_criterion_1_closed_forms_match_quadrature():
    for model in (GUMBEL, tc.NoiseModel.laplace(1.0), tc.NoiseModel.uniform(1.0)):
        for k in range(2, 11):
            closed = tc.slope_at_zero(model, k)
            quadv = slope_quadrature(model, k)
            assert abs(closed - quadv) <= 1e-8 * abs(closed), (model.kind, k)
            gamma_closed = 1.0 / (k**3 * (k - 1) * closed**2)
            gamma_quad = 1.0 / (k**3 * (k - 1) * quadv**2)
            assert abs(gamma_closed - gamma_quad) <= 1e-7 * gamma_closed
    gauss = tc.NoiseModel.gaussian(1.0)
    for k in range(2, 11):
        forms = slope_representations(gauss, k, forms=["max_density", "even"])
        assert forms["even"] == pytest.approx(forms["max_density"], rel=1e-7)


@criterion(
    2,
    "error vs cardinality, 100 reps, both noise families",
    120.0 if N_WORKERS >= 8 else 600.0,
)
def test_criterion_2_mse_versus_cardinality():
    ratios = {}
    for kind in ("gumbel", "uniform"):
        spec = ExperimentSpec(
            n=10, m=100, k_values=tuple(range(2, 11)), repetitions=100,
            model=tc.NoiseModel.unit_variance(kind), method="mle", b=2.0,
            theta_mode="zero", seed=2, attach_bounds=False,
            threads=N_WORKERS if N_WORKERS >= 8 else 1,
        )
        result = run_mse_vs_k(spec)
        by_k = {r.k: r for r in result.rows}
        for row in result.rows:
            assert row.ci95_half_width == pytest.approx(1.96 * row.mse_stderr)
            assert row.mse_mean > 0
        ratios[kind] = by_k[10].mse_mean / by_k[2].mse_mean
    assert 0.4 <= ratios["gumbel"] <= 1.5, ratios
    assert ratios["uniform"] <= 0.15, ratios


@criterion(3, "double round-robin connectivity landmarks", 1.0)
def test_criterion_3_connectivity_landmarks():
    design = tc.ComparisonDesign.round_robin(20, 2)
    ds = tc.sample_dataset(GUMBEL, tc.ParamVector.zeros(20, 1.0), design, seed=0)
    curve = dict(tc.fiedler_prefix_curve(ds, "1/k^2", step=190))
    assert curve[190] == pytest.approx(10 / 38, abs=1e-9)
    assert curve[380] == pytest.approx(20 / 38, abs=1e-9)


@criterion(4, "two-item closed-form estimate, methods coincide", 1.0)
def test_criterion_4_two_item_estimator_oracle():
    ds = tc.Dataset(2, ["x", "y"], [((0, 1), 0)] * 3 + [((0, 1), 1)])
    target = math.log(3) / 2
    thetas = {}
    for method in ("mle", "rank_all", "rank_one"):
        rep = tc.estimate(ds, tc.EstimatorConfig(method=method, model=GUMBEL, b=2.0))
        assert rep.converged
        assert rep.theta_hat.theta == pytest.approx([target, -target], abs=1e-6)
        thetas[method] = rep.theta_hat.theta
    for method in ("rank_all", "rank_one"):
        assert np.max(np.abs(thetas[method] - thetas["mle"])) <= 1e-8


@criterion(5, "estimator consistency sweep and bound dominance", 300.0)
def test_criterion_5_consistency_and_bound_dominance():
    # (a) mean MSE over 20 seeds drops at least 5x from m=1e3 to m=1e5
    n, k = 6, 4
    for method in ("mle", "rank_all", "rank_one"):
        means = {}
        for m in (1_000, 100_000):
            errs = []
            for seed in range(20):
                rng = tc.substream(900 + seed)
                theta_star = random_zero_sum(rng, n, 1.0)
                ds = tc.sample_dataset(
                    GUMBEL, theta_star, tc.ComparisonDesign.uniform(n, k),
                    m, seed=7000 + seed,
                )
                rep = tc.estimate(
                    ds,
                    tc.EstimatorConfig(
                        method=method, model=GUMBEL, b=1.0, seed=seed
                    ),
                )
                errs.append(tc.mse(rep.theta_hat.theta, theta_star.theta))
            means[m] = float(np.mean(errs))
        assert means[1_000] / means[100_000] >= 5.0, (method, means)

    # (b) measured error bracketed by theory on every n=10, k=2, m=2000 run
    consts = luce_constants(1.0, 1.0)
    lower = cramer_rao_uniform(GUMBEL, k=2, n=10, m=2000, constants=consts)
    for seed in range(20):
        rng = tc.substream(40 + seed)
        theta_star = random_zero_sum(rng, 10, 1.0)
        ds = tc.sample_dataset(
            GUMBEL, theta_star, tc.ComparisonDesign.uniform(10, 2),
            2000, seed=300 + seed,
        )
        rep = tc.estimate(ds, tc.EstimatorConfig(method="mle", model=GUMBEL, b=1.0))
        err = tc.mse(rep.theta_hat.theta, theta_star.theta)
        fied = tc.spectrum(tc.weighted_adjacency(ds, 1.0)).fiedler
        upper = mse_upper_bound(
            "luce_full", n=10, m=2000, k=2, b=1.0, model=GUMBEL, fiedler=fied
        )
        assert lower.bound_value <= err <= upper.bound_value, (
            seed, lower.bound_value, err, upper.bound_value,
        )


@criterion(6, "derivatives vs finite differences, 50 instances/model", 60.0)
def test_criterion_6_derivative_suite():
    h = 1e-5
    for model in ALL_MODELS:
        rng = tc.substream(11, model.kind_id)
        # data-likelihood gradient vs central differences
        for _ in range(50):
            n = int(rng.integers(3, 6))
            obs = []
            for _ in range(int(rng.integers(3, 12))):
                kk = int(rng.integers(2, min(4, n) + 1))
                items = tuple(int(v) for v in rng.choice(n, kk, replace=False))
                obs.append((items, items[int(rng.integers(kk))]))
            ds = tc.Dataset(n, [str(i) for i in range(n)], obs)
            th = rng.uniform(-0.8, 0.8, n)
            th -= th.mean()
            comp = _compress(ds)
            _, g, _ = _eval_nll(comp, model, th, want_grad=True)
            i = int(rng.integers(n))
            e = np.zeros(n)
            e[i] = h
            lp, _, _ = _eval_nll(comp, model, th + e, want_grad=False)
            lm, _, _ = _eval_nll(comp, model, th - e, want_grad=False)
            fd = (lp - lm) / (2 * h)
            assert g[i] == pytest.approx(fd, rel=1e-5, abs=1e-7)
        # choice-probability gradient vs central differences
        for _ in range(50):
            kk = int(rng.choice([2, 3, 5]))
            x = rng.uniform(-2, 2, kk - 1)
            g = tc.choice_prob_grad(model, x)
            v = int(rng.integers(kk - 1))
            e = np.zeros(kk - 1)
            e[v] = h
            fd = (tc.choice_prob(model, x + e) - tc.choice_prob(model, x - e)) / (2 * h)
            assert g[v] == pytest.approx(fd, rel=1e-5, abs=1e-9)
    # softmax Hessian vs differentiated gradient
    rng = tc.substream(12)
    for _ in range(50):
        n = int(rng.integers(3, 6))
        obs = []
        for _ in range(10):
            kk = int(rng.integers(2, min(4, n) + 1))
            items = tuple(int(v) for v in rng.choice(n, kk, replace=False))
            obs.append((items, items[0]))
        ds = tc.Dataset(n, [str(i) for i in range(n)], obs)
        th = rng.uniform(-0.8, 0.8, n)
        th -= th.mean()
        H = tc.loglik_hessian_luce(ds, GUMBEL, tc.ParamVector(th, 1.0))
        comp = _compress(ds)
        i = int(rng.integers(n))
        e = np.zeros(n)
        e[i] = h
        _, gp, _ = _eval_nll(comp, GUMBEL, th + e, want_grad=True)
        _, gm, _ = _eval_nll(comp, GUMBEL, th - e, want_grad=True)
        assert H[:, i] == pytest.approx((gp - gm) / (2 * h), abs=1e-4)


@criterion(7, "Laplacian structure, gradient shift-invariance", 60.0)
def test_criterion_7_structural_invariants():
    rng = tc.substream(13)
    # negated softmax Hessians are nonnegative-weight Laplacians
    ds = tc.sample_dataset(
        GUMBEL, tc.ParamVector.zeros(6, 1.0), tc.ComparisonDesign.uniform(6, 3),
        40, seed=5,
    )
    for _ in range(100):
        theta = random_zero_sum(rng, 6, 1.0)
        H = tc.loglik_hessian_luce(ds, GUMBEL, theta)
        neg = -H
        assert np.max(np.abs(neg.sum(axis=1))) <= 1e-9
        assert np.all(neg[~np.eye(6, dtype=bool)] <= 1e-12)
        g = tc.loglik_grad(ds, GUMBEL, theta)
        assert abs(float(g.sum())) <= 1e-9
    # Laplacian row sums and connectivity equivalence on random data
    from topchoice.comparisons import connected_components

    for trial in range(200):
        n = int(rng.integers(3, 9))
        obs = []
        for _ in range(int(rng.integers(1, 9))):
            kk = int(rng.integers(2, min(4, n) + 1))
            items = tuple(int(v) for v in rng.choice(n, kk, replace=False))
            obs.append((items, items[0]))
        dsr = tc.Dataset(n, [str(i) for i in range(n)], obs)
        adj = tc.weighted_adjacency(dsr, 1.0)
        L = tc.laplacian(adj)
        assert np.max(np.abs(L.sum(axis=1))) <= 1e-10
        fied = tc.spectrum(adj).fiedler
        assert (fied > 1e-10) == (len(connected_components(dsr)) == 1)


@criterion(8, "point-score recovery rate at the sufficient m", 120.0)
def test_criterion_8_classifier_monte_carlo():
    model = tc.NoiseModel.unit_variance("gumbel")
    n, k, b, delta = 8, 3, 0.8, 0.2
    rep = tc.classify_sample_complexity(
        model, k, b, n, delta, check_conditions=False
    )
    m = min(int(math.ceil(rep.sufficient_m)), 50_000)
    hits = 0
    trials = 200
    for trial in range(trials):
        assignment = tc.sample_two_class_theta(n, b, 5000 + trial)
        ds = tc.sample_dataset(
            model, assignment.theta, tc.ComparisonDesign.uniform(n, k),
            m, seed=6000 + trial,
        )
        result = tc.point_score_classify(ds)
        hits += result.high_class == assignment.high_class
    assert hits / trials >= 1 - delta, (hits, trials, m)


@criterion(9, "winner frequencies vs choice probabilities", 60.0)
def test_criterion_9_sampler_fidelity():
    draws = 100_000
    for trial in range(20):
        model = ALL_MODELS[trial % 4]
        rng = tc.substream(800, trial)
        kk = int(rng.choice([2, 3, 5]))
        theta = rng.uniform(-1, 1, kk)
        theta -= theta.mean()
        ds = tc.sample_dataset(
            model, tc.ParamVector(theta, 2.0),
            tc.ComparisonDesign.explicit(kk, [tuple(range(kk))] * draws),
            seed=2000 + trial,
        )
        for i in range(kk):
            p = tc.choice_prob(model, theta[i] - np.delete(theta, i))
            freq = float(np.mean(ds.winners == i))
            sigma = math.sqrt(max(p * (1 - p), 1e-12) / draws)
            assert abs(freq - p) <= 4 * sigma + 1e-9, (trial, i, freq, p)
