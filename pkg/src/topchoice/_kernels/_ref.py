"""Pure-NumPy reference kernels.

These implement the same contract as the compiled extension in
``_fast.pyx`` and are selected automatically when the extension is not
available (or when ``TOPCHOICE_BACKEND=python``).
"""

from __future__ import annotations

import numpy as np

_SQRT2PI = np.sqrt(2.0 * np.pi)
_EULER = 0.5772156649015329

# Keep intermediate arrays below ~8M doubles when batches get large.
_CHUNK_ELEMS = 8_000_000


def _cdf(kind: int, scale: float, x):
    if kind == 0:  # gaussian
        from scipy.special import ndtr

        return ndtr(x / scale)
    if kind == 1:  # gumbel
        return np.exp(-np.exp(-(x / scale + _EULER)))
    if kind == 2:  # laplace
        return np.where(
            x < 0,
            0.5 * np.exp(np.minimum(x, 0.0) / scale),
            1.0 - 0.5 * np.exp(-np.maximum(x, 0.0) / scale),
        )
    return np.clip((x + scale) / (2.0 * scale), 0.0, 1.0)


def _pdf(kind: int, scale: float, x):
    if kind == 0:
        u = x / scale
        return np.exp(-0.5 * u * u) / (scale * _SQRT2PI)
    if kind == 1:
        t = x / scale + _EULER
        return np.exp(-t - np.exp(-t)) / scale
    if kind == 2:
        return np.exp(-np.abs(x) / scale) / (2.0 * scale)
    return np.where(np.abs(x) <= scale, 1.0 / (2.0 * scale), 0.0)


def panel_choice_integrals(kind, scale, X, rows, lo, hi, glx, glw, want_grad):
    """Gauss-Legendre panel integrals of the choice-probability integrand.

    For every panel p over [lo[p], hi[p]] belonging to batch row rows[p],
    column 0 holds the integral of prod_u F(x_u + z) f(z); when
    ``want_grad`` columns 1..km1 hold the integrals with one cdf factor
    replaced by the density (the per-component derivative integrands).
    """
    P = rows.shape[0]
    km1 = X.shape[1]
    Q = glx.shape[0]
    ncomp = 1 + km1 if want_grad else 1
    out = np.empty((P, ncomp), dtype=np.float64)
    if P == 0:
        return out
    per_panel = Q * max(km1, 1)
    step = max(1, _CHUNK_ELEMS // per_panel)
    for start in range(0, P, step):
        sl = slice(start, min(start + step, P))
        r = rows[sl]
        half = 0.5 * (hi[sl] - lo[sl])
        mid = 0.5 * (hi[sl] + lo[sl])
        z = mid[:, None] + half[:, None] * glx[None, :]  # (p, Q)
        shifts = X[r][:, :, None] + z[:, None, :]  # (p, km1, Q)
        F = _cdf(kind, scale, shifts)
        fz = _pdf(kind, scale, z)
        prod_all = F.prod(axis=1)
        out[sl, 0] = (prod_all * fz * glw).sum(axis=1) * half
        if want_grad:
            fsh = _pdf(kind, scale, shifts)
            # leave-one-out products via prefix/suffix cumprods
            pre = np.ones_like(F)
            pre[:, 1:, :] = np.cumprod(F[:, :-1, :], axis=1)
            suf = np.ones_like(F)
            suf[:, :-1, :] = np.cumprod(F[:, :0:-1, :], axis=1)[:, ::-1, :]
            integ = fsh * pre * suf * fz[:, None, :]
            out[sl, 1:] = (integ * glw[None, None, :]).sum(axis=2) * half[:, None]
    return out
