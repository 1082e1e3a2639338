"""Choice probabilities of random-utility models and derived constants.

``choice_prob`` evaluates the probability that the first item of a
comparison set wins, given the vector of its strength gaps to the other
members.  Gumbel noise admits the softmax closed form; the other
families go through adaptive quadrature of

    p_k(x) = integral  prod_v F(x_v + z) f(z) dz.

The module also exposes the scalar constants attached to a cardinality
k: the slope of p_k at the origin, the matched adjacency weight
(k * slope)^2, and the difficulty constant 1 / (k^3 (k-1) slope^2) that
governs how estimation error scales with comparison-set size.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy.special import logsumexp

from . import quadrature
from .errors import UnsupportedFormError, ValidationError
from .noise import GAUSSIAN, GUMBEL, LAPLACE, UNIFORM, NoiseModel

MAX_K_CLOSED = 10**6
MAX_K_QUADRATURE = 10**3


def _as_diffs(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size < 1:
        raise ValidationError("difference vector must be 1-d with length >= 1")
    return x


def _check_k(k: int, closed_form: bool) -> int:
    k = int(k)
    if k < 2:
        raise ValidationError(f"comparison-set cardinality must be >= 2, got {k}")
    cap = MAX_K_CLOSED if closed_form else MAX_K_QUADRATURE
    if k > cap:
        raise ValidationError(f"cardinality {k} exceeds the supported cap {cap}")
    return k


# -- p_k and derivatives ----------------------------------------------


def _gumbel_prob(beta: float, X: np.ndarray) -> np.ndarray:
    # p = 1 / (1 + sum exp(-x/beta)), evaluated in log space
    T = -X / beta
    lse = np.logaddexp(0.0, logsumexp(T, axis=1))
    return np.exp(-lse)


def _gumbel_prob_grad(beta: float, X: np.ndarray):
    T = -X / beta
    lse = np.logaddexp(0.0, logsumexp(T, axis=1))
    p = np.exp(-lse)
    grad = np.exp(T - 2.0 * lse[:, None]) / beta
    return p, grad


def choice_prob_batch(model: NoiseModel, X: np.ndarray) -> np.ndarray:
    """p_k for a batch of difference vectors, shape (g, k-1) -> (g,)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.kind == GUMBEL:
        return _gumbel_prob(model.scale, X)
    p, _ = quadrature.choice_integrals(model, X, want_grad=False)
    return p


def choice_prob_and_grad_batch(model: NoiseModel, X: np.ndarray):
    """(p, dp/dx) for a batch of difference vectors."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.kind == GUMBEL:
        return _gumbel_prob_grad(model.scale, X)
    return quadrature.choice_integrals(model, X, want_grad=True)


def choice_prob(model: NoiseModel, x) -> float:
    """Probability that the distinguished item wins.

    ``x`` holds the strength differences to the other k-1 members of the
    comparison set.  All-zero differences give exactly 1/k by symmetry.
    """
    x = _as_diffs(x)
    return float(choice_prob_batch(model, x[None, :])[0])


def choice_prob_grad(model: NoiseModel, x) -> np.ndarray:
    """Gradient of :func:`choice_prob` in the difference vector."""
    x = _as_diffs(x)
    _, grad = choice_prob_and_grad_batch(model, x[None, :])
    return grad[0]


def choice_prob_hessian_batch(model: NoiseModel, X: np.ndarray) -> np.ndarray:
    """Batched Hessian of p_k in x, shape (g, k-1, k-1).

    Off-diagonal entries integrate two density factors directly.  The
    diagonal is assembled by parts so that density jump points (Uniform
    noise) contribute their boundary terms instead of a spurious zero:

        d^2p/dx_v^2 = -sum_{u != v} H_uv
                      - int f(x_v+z) prod_{u != v} F(x_u+z) f'_ac(z) dz
                      - sum_j jump_j f(x_v+kappa_j) prod_{u != v} F(x_u+kappa_j)
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    g, km1 = X.shape

    if model.kind == GUMBEL:
        beta = model.scale
        T = -X / beta
        lse = np.logaddexp(0.0, logsumexp(T, axis=1))
        p = np.exp(-lse)
        e = np.exp(T)
        H = 2.0 * e[:, :, None] * e[:, None, :] * (p**3)[:, None, None] / beta**2
        diag = e * p[:, None] ** 2 * (2.0 * e * p[:, None] - 1.0) / beta**2
        H[:, np.arange(km1), np.arange(km1)] = diag
        return H

    pairs = [(u, v) for u in range(km1) for v in range(u + 1, km1)]
    n_comp = len(pairs) + km1

    def fn(rows, z):
        shifts = X[rows] + z[:, None]  # (N, km1)
        F = model.cdf(shifts)
        f = model.pdf(shifts)
        fz = model.pdf(z)
        out = np.empty((rows.size, n_comp))
        prod_all = F.prod(axis=1)
        for c, (u, v) in enumerate(pairs):
            loo = prod_all / np.where(F[:, u] > 0, F[:, u], 1.0)
            loo = loo / np.where(F[:, v] > 0, F[:, v], 1.0)
            mask = (F[:, u] > 0) & (F[:, v] > 0)
            loo = np.where(mask, loo, _slow_loo2(F, u, v))
            out[:, c] = f[:, u] * f[:, v] * loo * fz
        fac = model.pdf_deriv(z)
        for v in range(km1):
            loo = _slow_loo(F, v)
            out[:, len(pairs) + v] = f[:, v] * loo * fac
        return out

    rows, a, b, _ = quadrature._initial_segments(model, X, quadrature.ABS_TOL)
    vals = quadrature.integrate(fn, (rows, a, b), g, n_comp)

    H = np.zeros((g, km1, km1))
    for c, (u, v) in enumerate(pairs):
        H[:, u, v] = H[:, v, u] = vals[:, c]

    # diagonal: by-parts pieces
    for v in range(km1):
        acc = -H[:, v, :].sum(axis=1)  # -sum_{u != v} H_uv (diag still zero)
        acc -= vals[:, len(pairs) + v]
        for kappa, jump in model.pdf_jumps():
            others = np.delete(np.arange(km1), v)
            prod = model.cdf(X[:, others] + kappa - 0.0).prod(axis=1) if others.size else 1.0
            acc -= jump * model.pdf(X[:, v] + kappa) * prod
        H[:, v, v] = acc
    return H


def _slow_loo(F: np.ndarray, v: int) -> np.ndarray:
    others = np.delete(np.arange(F.shape[1]), v)
    return F[:, others].prod(axis=1) if others.size else np.ones(F.shape[0])


def _slow_loo2(F: np.ndarray, u: int, v: int) -> np.ndarray:
    others = np.delete(np.arange(F.shape[1]), [u, v])
    return F[:, others].prod(axis=1) if others.size else np.ones(F.shape[0])


def choice_prob_hessian(model: NoiseModel, x) -> np.ndarray:
    x = _as_diffs(x)
    return choice_prob_hessian_batch(model, x[None, :])[0]


# -- slope at the origin and derived constants ------------------------


@functools.lru_cache(maxsize=4096)
def _slope_quadrature_unit(kind: str, k: int) -> float:
    """integral f^2 F^(k-2) for the unit-scale model of the given kind."""
    model = NoiseModel(kind, 1.0)

    def fn(rows, z):
        f = model.pdf(z)
        F = model.cdf(z)
        return (f * f * F ** (k - 2))[:, None]

    segs = quadrature.scalar_segments(model)
    return float(quadrature.integrate(fn, segs, 1, 1)[0, 0])


def slope_quadrature(model: NoiseModel, k: int) -> float:
    """Quadrature evaluation of the slope integral (any family)."""
    k = _check_k(k, closed_form=False)
    # the integral scales as 1/scale under scale changes
    return _slope_quadrature_unit(model.kind, k) / model.scale


def slope_at_zero(model: NoiseModel, k: int) -> float:
    """Derivative of p_k in one gap component at all-equal strengths.

    Closed forms exist for Gumbel, Laplace and Uniform noise; Gaussian
    is evaluated by quadrature (no closed form at finite k).
    """
    if model.kind == GAUSSIAN:
        return slope_quadrature(model, k)
    k = _check_k(k, closed_form=True)
    s = model.scale
    if model.kind == GUMBEL:
        return 1.0 / (s * k * k)
    if model.kind == LAPLACE:
        return (1.0 - 2.0 ** (1 - k)) / (s * k * (k - 1))
    return 1.0 / (2.0 * s * (k - 1))


def matched_weight(model: NoiseModel, k: int) -> float:
    """Adjacency weight (k * slope_at_zero)^2 matched to the model."""
    return (k * slope_at_zero(model, k)) ** 2


def difficulty(model: NoiseModel, k: int) -> float:
    """Per-cardinality error-scale constant 1 / (k^3 (k-1) slope^2).

    Satisfies 1/difficulty == k (k-1) * matched_weight exactly.
    """
    sl = slope_at_zero(model, k)
    return 1.0 / (k**3 * (k - 1) * sl * sl)


# -- alternative representations of the slope -------------------------

_ALL_FORMS = ("direct", "max_density", "boundary", "even")


def _form_max_density(model: NoiseModel, k: int) -> float:
    """(1/(k-1)) * E[f(X)] with X the max of k-1 iid noise draws.

    Evaluated in quantile space: substitute u = F(x)^(k-1), so the
    integrand is f(icdf(u^(1/(k-1)))) on (0, 1) and the numerical path
    shares nothing with the direct form.
    """

    def fn(rows, u):
        u = np.clip(u, 1e-300, 1.0 - 1e-16)
        x = model.icdf(u ** (1.0 / (k - 1)))
        return model.pdf(x)[:, None]

    pts = np.linspace(0.0, 1.0, 11)
    segs = (np.zeros(10, dtype=np.int64), pts[:-1], pts[1:])
    val = float(quadrature.integrate(fn, segs, 1, 1)[0, 0])
    return val / (k - 1)


def _form_boundary(model: NoiseModel, k: int) -> float:
    """Bounded-support representation f(hi)/(k-1) + density-derivative term."""
    lo, hi = model.support()
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UnsupportedFormError(
            f"boundary representation needs compact support; {model.kind} is unbounded"
        )

    def fn(rows, z):
        val = -model.pdf_deriv(z) * model.cdf(z) ** (k - 1) * model.pdf(z)
        return val[:, None]

    segs = quadrature.scalar_segments(model)
    tail = float(quadrature.integrate(fn, segs, 1, 1)[0, 0]) / (k - 1)
    return float(model.pdf(hi)) / (k - 1) + tail


def _form_even(model: NoiseModel, k: int) -> float:
    """Even-density representation integrating over the positive axis only."""
    if not model.has_even_density():
        raise UnsupportedFormError(
            f"the even-density representation needs f(-x) == f(x); "
            f"{model.kind} noise is skewed"
        )

    def fn(rows, z):
        f = model.pdf(z)
        F = model.cdf(z)
        return (f * f * (F ** (k - 2) + (1.0 - F) ** (k - 2)))[:, None]

    eps = min(1e-13, quadrature.ABS_TOL / 20.0)
    _, zhi = model.tail_bounds(eps)
    pts = [0.0]
    pts.extend(kk for kk in model.kinks() if 0.0 < kk < zhi)
    if model.kind != UNIFORM:
        pts.extend(float(q) for q in model.icdf(np.linspace(0.5, 1, 8)[1:-1]))
    pts.append(zhi)
    pts = np.unique(np.asarray(pts))
    segs = (np.zeros(pts.size - 1, dtype=np.int64), pts[:-1], pts[1:])
    return float(quadrature.integrate(fn, segs, 1, 1)[0, 0])


def slope_representations(model: NoiseModel, k: int, forms=None) -> dict[str, float]:
    """Evaluate alternative representations of the origin slope.

    ``forms`` defaults to every representation the model admits; asking
    for "boundary" on an unbounded family raises UnsupportedFormError.
    All returned values agree with :func:`slope_at_zero` up to quadrature
    tolerance.
    """
    k = _check_k(k, closed_form=False)
    if forms is None:
        forms = ["direct", "max_density"]
        if model.has_even_density():
            forms.append("even")
        if model.kind == UNIFORM:
            forms.append("boundary")
    out: dict[str, float] = {}
    for name in forms:
        if name == "direct":
            out[name] = slope_quadrature(model, k)
        elif name == "max_density":
            out[name] = _form_max_density(model, k)
        elif name == "boundary":
            out[name] = _form_boundary(model, k)
        elif name == "even":
            out[name] = _form_even(model, k)
        else:
            raise ValidationError(f"unknown slope representation {name!r}")
    return out
