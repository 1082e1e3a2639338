"""Maximum-likelihood and rank-breaking strength estimation.

The log-likelihood of top-1 observations is

    ll(theta) = sum_t log p(winner_t | set_t, theta)

maximized over the zero-sum box {theta in [-b,b]^n : sum theta = 0} by
projected gradient ascent with Armijo backtracking.  Gumbel noise uses
the softmax closed form; every other family evaluates choice
probabilities by quadrature.  Rank breaking reduces each observation to
pair comparisons first (all winner-vs-other pairs, or one random pair)
and then runs the same pair-likelihood path.

Observations are compressed to distinct (set, winner) records with
multiplicities before any evaluation, which caches quadrature across
repeated comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import choice
from .comparisons import (
    Dataset,
    connected_components,
    spectrum,
    weighted_adjacency,
    FIEDLER_POSITIVE_TOL,
)
from .errors import DisconnectedError, UnsupportedModelError, ValidationError
from .noise import GUMBEL, NoiseModel
from .sampler import ParamVector, substream

PROB_FLOOR = 1e-300
METHODS = ("mle", "rank_all", "rank_one")

ARMIJO_SLOPE = 1e-4
ARMIJO_CONTRACTION = 0.5
INITIAL_STEP = 1.0
MIN_STEP = 1e-18


@dataclass(frozen=True)
class EstimatorConfig:
    method: str
    model: NoiseModel
    b: float
    tol_grad: float = 1e-8
    max_iter: int = 10_000
    seed: int = 0  # used only by rank_one's random opponent draws

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (self.b > 0):
            raise ValidationError("box radius b must be positive")
        if not (self.tol_grad > 0):
            raise ValidationError("tol_grad must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")


@dataclass(frozen=True)
class EstimateReport:
    theta_hat: ParamVector
    loglik: float
    grad_norm: float
    iterations: int
    converged: bool
    active_box: tuple[int, ...]
    underflows: int = 0


# -- compressed sufficient statistics -----------------------------------

# {k: (records (g, k) winner-first, counts (g,))}
Compressed = dict[int, tuple[np.ndarray, np.ndarray]]


def _compress(ds: Dataset) -> Compressed:
    """Deduplicate observations into weighted (winner, others...) records."""
    out: Compressed = {}
    for k, (sets, winners) in ds.groups().items():
        others = sets[sets != winners[:, None]].reshape(-1, k - 1)
        canon = np.column_stack([winners, others])
        uniq, counts = np.unique(canon, axis=0, return_counts=True)
        out[k] = (uniq, counts.astype(np.float64))
    return out


def _compress_pairs(pairs: np.ndarray) -> Compressed:
    """Pairs given as (t, 2) winner-first rows."""
    uniq, counts = np.unique(pairs, axis=0, return_counts=True)
    return {2: (uniq, counts.astype(np.float64))}


def _break_all(ds: Dataset) -> Compressed:
    rows = []
    for k, (sets, winners) in ds.groups().items():
        others = sets[sets != winners[:, None]].reshape(-1, k - 1)
        rows.append(
            np.column_stack(
                [np.repeat(winners, k - 1), others.reshape(-1)]
            )
        )
    return _compress_pairs(np.concatenate(rows, axis=0))


def _break_one(ds: Dataset, seed: int) -> Compressed:
    """One winner-vs-random-opponent pair per observation.

    Opponents are drawn once, at reduction time, from a stream derived
    from the config seed, so repeated estimates agree.
    """
    rng = substream(seed, 0x7261)
    rows = []
    for k, (sets, winners) in ds.groups().items():
        others = sets[sets != winners[:, None]].reshape(-1, k - 1)
        pick = rng.integers(0, k - 1, size=others.shape[0])
        z = others[np.arange(others.shape[0]), pick]
        rows.append(np.column_stack([winners, z]))
    return _compress_pairs(np.concatenate(rows, axis=0))


# -- likelihood evaluation ----------------------------------------------


def _eval_nll(
    comp: Compressed,
    model: NoiseModel,
    theta: np.ndarray,
    want_grad: bool,
):
    """(loglik, grad or None, underflow count) at a raw theta vector."""
    n = theta.size
    ll = 0.0
    grad = np.zeros(n) if want_grad else None
    clamped = 0
    beta = model.scale
    for k, (recs, w) in comp.items():
        if model.kind == GUMBEL:
            T = theta[recs] / beta
            lse = logsumexp(T, axis=1)
            ll += float(np.dot(w, T[:, 0] - lse))
            if want_grad:
                P = np.exp(T - lse[:, None])
                contrib = -P * (w / beta)[:, None]
                contrib[:, 0] += w / beta
                np.add.at(grad, recs, contrib)
        else:
            X = theta[recs[:, :1]] - theta[recs[:, 1:]]
            if want_grad:
                p, G = choice.choice_prob_and_grad_batch(model, X)
            else:
                p = choice.choice_prob_batch(model, X)
                G = None
            low = p < PROB_FLOOR
            clamped += int(low.sum())
            pc = np.maximum(p, PROB_FLOOR)
            ll += float(np.dot(w, np.log(pc)))
            if want_grad:
                scale = (w / pc)[:, None]
                GS = G * scale
                np.add.at(grad, recs[:, 0], GS.sum(axis=1))
                np.add.at(grad, recs[:, 1:], -GS)
    return ll, grad, clamped


def _require_valid(ds: Dataset, theta: ParamVector) -> np.ndarray:
    if ds.m == 0:
        raise ValidationError("dataset has no observations")
    if not isinstance(theta, ParamVector):
        raise ValidationError("theta must be a ParamVector (zero-sum box vector)")
    if theta.n != ds.n_items:
        raise ValidationError(
            f"theta has {theta.n} entries for {ds.n_items} items"
        )
    return theta.theta


def loglik(ds: Dataset, model: NoiseModel, theta: ParamVector) -> float:
    """Log-likelihood of the dataset at theta."""
    th = _require_valid(ds, theta)
    ll, _, _ = _eval_nll(_compress(ds), model, th, want_grad=False)
    return ll


def loglik_grad(ds: Dataset, model: NoiseModel, theta: ParamVector) -> np.ndarray:
    """Gradient of the log-likelihood; components sum to zero."""
    th = _require_valid(ds, theta)
    _, g, _ = _eval_nll(_compress(ds), model, th, want_grad=True)
    return g


def loglik_hessian_luce(
    ds: Dataset, model: NoiseModel, theta: ParamVector
) -> np.ndarray:
    """Hessian of the Gumbel (softmax) log-likelihood.

    Off-diagonal (i, j): sum over observations containing both of
    p_i p_j / beta^2; diagonal entries make every row sum to zero, so
    the negated Hessian is a Laplacian of a nonnegative matrix.
    """
    if model.kind != GUMBEL:
        raise UnsupportedModelError(
            "closed-form likelihood Hessians exist only for Gumbel noise"
        )
    th = _require_valid(ds, theta)
    beta = model.scale
    n = ds.n_items
    H = np.zeros((n, n))
    for k, (sets, _) in ds.groups().items():
        T = th[sets] / beta
        P = np.exp(T - logsumexp(T, axis=1)[:, None])
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                np.add.at(
                    H, (sets[:, i], sets[:, j]), P[:, i] * P[:, j] / beta**2
                )
    H[np.diag_indices(n)] = -H.sum(axis=1)
    return H


def mse(theta_hat, theta_star) -> float:
    """Mean squared error (1/n) * ||theta_hat - theta_star||^2."""
    a = theta_hat.theta if isinstance(theta_hat, ParamVector) else np.asarray(theta_hat, float)
    b = theta_star.theta if isinstance(theta_star, ParamVector) else np.asarray(theta_star, float)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(d @ d) / a.size


# -- feasible-set geometry ----------------------------------------------


def project_box_zero_sum(x: np.ndarray, b: float) -> np.ndarray:
    """Alternate mean-subtraction and clipping to [-b, b].

    Iterates the pair at most 100 times, stopping at joint feasibility
    1e-12; the result satisfies the ParamVector slack.
    """
    x = np.asarray(x, dtype=float).copy()
    for _ in range(100):
        x -= x.mean()
        clipped = np.clip(x, -b, b)
        moved = float(np.max(np.abs(clipped - x))) if x.size else 0.0
        x = clipped
        if moved <= 1e-12 and abs(float(x.sum())) <= 1e-12:
            break
    return x


def projected_gradient(g: np.ndarray, x: np.ndarray, b: float) -> np.ndarray:
    """Projection of the ascent gradient onto feasible directions at x.

    Feasible directions keep the zero sum and do not push active box
    coordinates further outward; the active set grows monotonically
    until the projection is consistent.
    """
    n = g.size
    at_hi = x >= b - 1e-9
    at_lo = x <= -b + 1e-9
    blocked = np.zeros(n, dtype=bool)
    d = g - g.mean()
    for _ in range(n + 1):
        viol = (at_hi & (d > 0) & ~blocked) | (at_lo & (d < 0) & ~blocked)
        if not viol.any():
            return d
        blocked |= viol
        free = ~blocked
        d = np.zeros(n)
        if free.any():
            d[free] = g[free] - g[free].mean()
    return d


# -- the estimator -------------------------------------------------------


def _check_connected(ds: Dataset) -> None:
    adj = weighted_adjacency(ds, 1.0)
    if spectrum(adj).fiedler <= FIEDLER_POSITIVE_TOL:
        comps = sorted(connected_components(ds), key=len)
        side = comps[0]
        rest = tuple(i for i in range(ds.n_items) if i not in set(side))
        raise DisconnectedError(side, rest)


def estimate(ds: Dataset, cfg: EstimatorConfig) -> EstimateReport:
    """Maximize the (pseudo) log-likelihood over the zero-sum box.

    ``rank_all`` and ``rank_one`` reduce the data to pair comparisons
    and then share the pair likelihood path; on pair-only data all three
    methods coincide.  Degenerate data (an item that never wins or never
    loses) lands on the box boundary and is reported via ``active_box``.
    """
    if ds.m == 0:
        raise ValidationError("dataset has no observations")
    if ds.n_items < 2:
        raise ValidationError("estimation needs at least two items")
    _check_connected(ds)

    if cfg.method == "mle":
        comp = _compress(ds)
    elif cfg.method == "rank_all":
        comp = _break_all(ds)
    else:
        comp = _break_one(ds, cfg.seed)

    model, b = cfg.model, cfg.b
    x = project_box_zero_sum(np.zeros(ds.n_items), b)
    ll, g, clamped = _eval_nll(comp, model, x, want_grad=True)

    iterations = 0
    converged = False
    flat_mode = False
    flat_alpha = INITIAL_STEP
    for _ in range(cfg.max_iter):
        pg_norm = float(np.linalg.norm(projected_gradient(g, x, b)))
        if pg_norm <= cfg.tol_grad:
            converged = True
            break

        accepted = False
        flat_tol = 64.0 * np.finfo(float).eps * max(1.0, abs(ll))
        if not flat_mode:
            # Armijo backtracking from a unit trial step.  Zero steps
            # (alpha underflow against x) are failures, not acceptances,
            # and improvements within float noise of ll do not count:
            # both otherwise livelock the loop on +-eps*|ll| jitter.
            alpha = INITIAL_STEP
            while alpha >= MIN_STEP:
                x_new = project_box_zero_sum(x + alpha * g, b)
                step = x_new - x
                if not np.any(step):
                    alpha *= ARMIJO_CONTRACTION
                    continue
                ll_new, _, _ = _eval_nll(comp, model, x_new, want_grad=False)
                if (
                    ll_new >= ll + ARMIJO_SLOPE * float(g @ step)
                    and ll_new - ll > flat_tol
                ):
                    accepted = True
                    break
                alpha *= ARMIJO_CONTRACTION
            if accepted:
                x = x_new
                ll, g, clamped = _eval_nll(comp, model, x, want_grad=True)
                iterations += 1
                continue
            # Objective differences hit float resolution while the
            # gradient is still resolvable; switch permanently to
            # gradient-norm descent.
            flat_mode = True
        alpha = min(2.0 * flat_alpha, INITIAL_STEP)
        while alpha >= MIN_STEP:
            x_new = project_box_zero_sum(x + alpha * g, b)
            if not np.any(x_new - x):
                alpha *= ARMIJO_CONTRACTION
                continue
            ll_new, g_new, clamped_new = _eval_nll(comp, model, x_new, want_grad=True)
            pg_new = float(np.linalg.norm(projected_gradient(g_new, x_new, b)))
            if ll_new >= ll - flat_tol and pg_new <= 0.9 * pg_norm:
                x, ll, g, clamped = x_new, ll_new, g_new, clamped_new
                flat_alpha = alpha
                accepted = True
                iterations += 1
                break
            alpha *= ARMIJO_CONTRACTION
        if not accepted:
            break

    pg = projected_gradient(g, x, b)
    grad_norm = float(np.linalg.norm(pg))
    converged = converged or grad_norm <= cfg.tol_grad
    active = tuple(int(i) for i in np.nonzero(np.abs(x) >= b - 1e-9)[0])
    return EstimateReport(
        theta_hat=ParamVector(x, b),
        loglik=ll,
        grad_norm=grad_norm,
        iterations=iterations,
        converged=converged,
        active_box=active,
        underflows=clamped,
    )
