"""Adaptive panel quadrature for choice-probability integrals.

The integrands here are products of shifted noise cdfs times the noise
density, integrated over the real line.  The domain is truncated where
the noise tails fall below a fraction of the absolute tolerance, split
at every kink of the integrand (cdf/density kinks, shifted per
difference component), and then refined adaptively: each panel is
integrated with a fixed Gauss-Legendre rule, halved, and accepted once
the parent/children discrepancy fits the panel's proportional share of
the tolerance budget.

For Uniform noise the integrand restricted to a kink-free panel is a
polynomial of degree < 2 * n_nodes, so the initial panels are already
exact and no refinement pass is run.

Everything is vectorized over a batch of difference vectors; the panel
evaluation itself is delegated to the selected kernel backend.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import _kernels
from .errors import NumericalError
from .noise import UNIFORM, NoiseModel

ABS_TOL = 1e-10
REL_TOL = 1e-9
MAX_DEPTH = 48

_GL_ORDER = 8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)

# number of quantile-spaced initial panels for smooth integrands
_N_SPLITS = 8


def _window(model: NoiseModel, X: np.ndarray, abs_tol: float):
    """Per-row truncated integration window (lo, hi) plus empty-row mask.

    The cut point is set where the noise tail mass is below abs_tol/20 so
    truncation cannot consume the error budget; for Uniform the window is
    exact and rows whose product support is empty are flagged.
    """
    g = X.shape[0]
    if model.kind == UNIFORM:
        a = model.scale
        lo = np.maximum(-a, (-a - X).max(axis=1))
        hi = np.full(g, a)
        empty = lo >= hi
        return lo, hi, empty
    eps = min(1e-13, abs_tol / 20.0)
    zlo, zhi = model.tail_bounds(eps)
    return np.full(g, zlo), np.full(g, zhi), np.zeros(g, dtype=bool)


def _initial_segments(model: NoiseModel, X: np.ndarray, abs_tol: float):
    """Split each row's window at integrand kinks and tail quantiles.

    Returns (rows, lo, hi, empty_mask) describing the initial panels.
    """
    g, km1 = X.shape
    lo, hi, empty = _window(model, X, abs_tol)

    cols = [lo[:, None], hi[:, None]]
    kinks = model.kinks()
    if kinks:
        for kappa in kinks:
            cols.append(kappa - X)  # kinks of each shifted cdf factor
            cols.append(np.full((g, 1), kappa))  # kinks of the density
    if model.kind != UNIFORM:
        # quantile-spaced boundaries concentrate panels where mass lives
        qs = model.icdf(np.linspace(0.0, 1.0, _N_SPLITS + 1)[1:-1])
        cols.append(np.broadcast_to(qs, (g, qs.size)))
        cols.append(-X)  # transition centers of the shifted cdfs

    pts = np.concatenate(cols, axis=1)
    pts = np.clip(pts, lo[:, None], hi[:, None])
    pts.sort(axis=1)

    seg_lo = pts[:, :-1]
    seg_hi = pts[:, 1:]
    span = np.maximum(hi - lo, 1e-300)
    keep = (seg_hi - seg_lo) > 1e-14 * span[:, None]
    keep &= ~empty[:, None]

    rows = np.broadcast_to(np.arange(g, dtype=np.int64)[:, None], keep.shape)[keep]
    return rows, seg_lo[keep], seg_hi[keep], empty


def _refine(eval_panels, n_rows, n_comp, rows, a, b, abs_tol, rel_tol, max_depth):
    """Adaptive bisection with parent/children error estimates.

    A panel is accepted when, for every component, the discrepancy
    between its estimate and the sum of its halves is within the panel's
    length-proportional share of max(abs_tol, rel_tol * |estimate|).
    """
    total = np.zeros((n_rows, n_comp))
    if rows.size == 0:
        return total
    row_len = np.zeros(n_rows)
    np.add.at(row_len, rows, b - a)

    parents = eval_panels(rows, a, b)
    pending = np.zeros((n_rows, n_comp))
    np.add.at(pending, rows, parents)

    for _ in range(max_depth):
        mid = 0.5 * (a + b)
        left = eval_panels(rows, a, mid)
        right = eval_panels(rows, mid, b)
        children = left + right
        err = np.abs(parents - children)

        estimate = np.abs(total + pending)
        budget = np.maximum(abs_tol, rel_tol * estimate)[rows]
        frac = ((b - a) / row_len[rows])[:, None]
        # the roundoff floor keeps endpoint panels from refining forever
        # once their error estimate is pure float noise
        floor = 32.0 * np.finfo(float).eps * estimate[rows] + 1e-300
        ok = (err <= np.maximum(budget * frac, floor)).all(axis=1)

        np.add.at(total, rows[ok], children[ok])
        bad = ~ok
        if not bad.any():
            return total

        rows = np.concatenate([rows[bad], rows[bad]])
        a, b = np.concatenate([a[bad], mid[bad]]), np.concatenate([mid[bad], b[bad]])
        parents = np.concatenate([left[bad], right[bad]])
        pending = np.zeros((n_rows, n_comp))
        np.add.at(pending, rows, parents)

    worst = float(np.max(np.abs(err[bad])))
    raise NumericalError(
        f"quadrature failed to converge on {int(bad.sum())} panel(s)", achieved=worst
    )


def choice_integrals(
    model: NoiseModel,
    X: np.ndarray,
    want_grad: bool = False,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
):
    """Batched p_k (and optionally its x-gradient) by quadrature.

    X has shape (g, k-1); returns (p, grad) where p is (g,) and grad is
    (g, k-1) or None.  Gumbel callers should prefer the closed form in
    :mod:`topchoice.choice`; this routine does not special-case it.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    g, km1 = X.shape
    rows, a, b, _ = _initial_segments(model, X, abs_tol)
    n_comp = 1 + km1 if want_grad else 1

    kind, scale = model.kind_id, model.scale

    def eval_panels(r, lo, hi):
        return _kernels.panel_choice_integrals(
            kind, scale, X, r, lo, hi, _GL_NODES, _GL_WEIGHTS, want_grad
        )

    if model.kind == UNIFORM and km1 + 1 <= 2 * _GL_ORDER - 1:
        # piecewise-polynomial integrand: initial panels are exact
        total = np.zeros((g, n_comp))
        if rows.size:
            np.add.at(total, rows, eval_panels(rows, a, b))
    else:
        total = _refine(
            eval_panels, g, n_comp, rows, a, b, abs_tol, rel_tol, MAX_DEPTH
        )

    p = np.clip(total[:, 0], 0.0, 1.0)
    grad = np.maximum(total[:, 1:], 0.0) if want_grad else None
    return p, grad


def integrate(
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    segments: tuple[np.ndarray, np.ndarray, np.ndarray],
    n_rows: int,
    n_comp: int,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
) -> np.ndarray:
    """Generic adaptive integration of a batched callback integrand.

    ``fn(rows, z)`` must return an (N, n_comp) array of integrand values;
    ``segments`` is the (rows, lo, hi) triple of initial panels.
    """
    seg_rows, seg_a, seg_b = segments

    def eval_panels(r, lo, hi):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        z = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        vals = fn(np.repeat(r, _GL_ORDER), z.ravel())
        vals = vals.reshape(r.size, _GL_ORDER, n_comp)
        return (vals * _GL_WEIGHTS[None, :, None]).sum(axis=1) * half[:, None]

    return _refine(
        eval_panels, n_rows, n_comp, seg_rows, seg_a, seg_b, abs_tol, rel_tol,
        MAX_DEPTH,
    )


def scalar_segments(model: NoiseModel, abs_tol: float = ABS_TOL, extra=()):
    """Initial panels for a single scalar integral over the noise domain."""
    eps = min(1e-13, abs_tol / 20.0)
    zlo, zhi = model.tail_bounds(eps)
    pts = [zlo, zhi]
    pts.extend(k for k in model.kinks() if zlo < k < zhi)
    if model.kind != UNIFORM:
        pts.extend(float(q) for q in model.icdf(np.linspace(0, 1, 10)[1:-1]))
    pts.extend(p for p in extra if zlo < p < zhi)
    pts = np.unique(np.asarray(pts, dtype=float))
    rows = np.zeros(pts.size - 1, dtype=np.int64)
    return rows, pts[:-1], pts[1:]
