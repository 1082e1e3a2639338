"""Theoretical error bounds for the estimators, evaluated numerically.

Upper bounds all share the shape D^2 * n (log n + 2) / (fiedler^2 * m)
with a theorem-specific constant D; the information-theoretic lower
bound is a spectral sum over the expected comparison structure.  Bounds
are reported even when a theorem's side condition fails: the flag goes
into the report, since the conditions are sufficient-only and the
curves are still useful for plotting.

Natural logarithms throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import choice
from .comparisons import WeightedAdjacency, spectrum
from .errors import ValidationError
from .noise import GUMBEL, NoiseModel
from .sampler import substream

THEOREMS = ("pair", "luce_full", "general", "rank_all", "rank_one")


@dataclass(frozen=True)
class ModelConstants:
    """Curvature/gradient/probability-ratio constants over the box.

    A bounds the log-probability curvature ratio from below, B the
    gradient-norm ratio from above, C the probability ratio from below;
    the tilde variants bound the same ratios from the other side.  D is
    the composite each theorem consumes.
    """

    A: float
    B: float
    C: float
    A_tilde: float
    C_tilde: float
    D: float
    b: float
    source: str = "closed-form"


def bt_pair_constants(beta: float, b: float) -> ModelConstants:
    """Closed-form pair-comparison constants for Gumbel noise.

    A = e^(-2b/beta) / (beta^2 (1 + e^(-2b/beta))^2),
    B = 1 / (beta (1 + e^(-2b/beta))), D = B / A = beta (e^(2b/beta) + 1).
    """
    if beta <= 0 or b < 0:
        raise ValidationError("need beta > 0 and b >= 0")
    q = math.exp(-2.0 * b / beta)
    A = q / (beta**2 * (1.0 + q) ** 2)
    B = 1.0 / (beta * (1.0 + q))
    D = beta * (math.exp(2.0 * b / beta) + 1.0)
    assert abs(D - B / A) <= 1e-12 * D
    return ModelConstants(
        A=A, B=B, C=1.0, A_tilde=1.0 / q if q > 0 else math.inf,
        C_tilde=math.exp(2.0 * b / beta), D=D, b=b,
    )


def luce_constants(beta: float, b: float) -> ModelConstants:
    """Closed-form k-ary constants for Gumbel noise.

    A = e^(-4b/beta), B = 4, C = e^(-2b/beta); the reverse ratios are
    A~ = e^(4b/beta) and C~ = e^(2b/beta); D = B/(A C).
    """
    if beta <= 0 or b < 0:
        raise ValidationError("need beta > 0 and b >= 0")
    A = math.exp(-4.0 * b / beta)
    B = 4.0
    C = math.exp(-2.0 * b / beta)
    return ModelConstants(
        A=A, B=B, C=C,
        A_tilde=math.exp(4.0 * b / beta), C_tilde=math.exp(2.0 * b / beta),
        D=B / (A * C), b=b,
    )


def luce_sigma_upper(beta: float) -> float:
    """Upper bound 1/beta^2 on the inverse difficulty for Gumbel noise."""
    return 1.0 / beta**2


def pair_constants(model: NoiseModel, b: float, grid: int = 2001) -> ModelConstants:
    """Numeric pair-comparison constants for arbitrary noise.

    Scans log p_2 and its derivatives on a dense grid over [-2b, 2b].
    A is the smallest negated curvature; if the pair probability
    saturates inside the interval (Uniform noise with 2b beyond the
    support width) A is 0 and D is infinite, which is reported rather
    than raised.
    """
    if model.kind == GUMBEL:
        return bt_pair_constants(model.scale, b)
    xs = np.linspace(-2.0 * b, 2.0 * b, grid)
    p, G = choice.choice_prob_and_grad_batch(model, xs[:, None])
    H = choice.choice_prob_hessian_batch(model, xs[:, None])[:, 0, 0]
    g = G[:, 0]
    # log-derivative ratios are meaningless where p has collapsed to 0
    # (possible for compact-support noise when the box outruns it); such
    # points only make the conditions fail harder, never better
    valid = p > 1e-12
    pv, gv, Hv = p[valid], g[valid], H[valid]
    logp1 = gv / pv
    logp2 = (Hv * pv - gv * gv) / (pv * pv)
    A = float(-np.max(logp2))
    B = float(np.max(logp1))
    p_mid = choice.choice_prob(model, [0.0])
    c_lo = float(np.min(p) / p_mid)
    c_hi = float(np.max(p) / p_mid)
    # curvature ratio at the worst point relative to the origin
    curv0 = float(-logp2[np.argmin(np.abs(xs[valid]))])
    a_hi = float(-np.min(logp2)) / curv0 if curv0 > 0 else math.inf
    D = B / A if A > 0 else math.inf
    return ModelConstants(
        A=max(A, 0.0), B=B, C=c_lo, A_tilde=a_hi, C_tilde=c_hi,
        D=D, b=b, source=f"grid({grid})",
    )


def sampled_constants(
    model: NoiseModel, b: float, k: int, samples: int = 512, seed: int = 0
) -> ModelConstants:
    """Sampled k-ary constants for arbitrary noise (not certified).

    Ratios of the negative log-probability Hessian, probability and
    gradient norm between random box strength vectors and the origin are
    scanned over ``samples`` draws; extremes become the constants.
    """
    if model.kind == GUMBEL:
        return luce_constants(model.scale, b)
    k = int(k)
    rng = substream(seed, 0xC0)
    km1 = k - 1

    X0 = np.zeros((1, km1))
    p0, G0 = choice.choice_prob_and_grad_batch(model, X0)
    H0x = choice.choice_prob_hessian_batch(model, X0)[0]
    J = _diff_jacobian(k)
    nlp0 = _neg_log_hessian_theta(p0[0], G0[0], H0x, J)
    g0_norm = _theta_grad_norm(G0[0], J)

    theta = rng.uniform(-b, b, size=(samples, k))
    X = theta[:, :1] - theta[:, 1:]
    p, G = choice.choice_prob_and_grad_batch(model, X)
    H = choice.choice_prob_hessian_batch(model, X)

    off = ~np.eye(k, dtype=bool)
    base = nlp0[off]
    a_lo, a_hi = math.inf, 0.0
    b_hi = 0.0
    # probabilities can collapse to 0 inside a wide box (compact-support
    # noise); the curvature ratios then legitimately diverge
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(samples):
            nlp = _neg_log_hessian_theta(max(p[s], 1e-150), G[s], H[s], J)
            ratios = nlp[off] / base
            a_lo = min(a_lo, float(ratios.min()))
            a_hi = max(a_hi, float(ratios.max()))
            b_hi = max(b_hi, _theta_grad_norm(G[s], J) / g0_norm)
    c_lo = float(np.min(p) / p0[0])
    c_hi = float(np.max(p) / p0[0])
    A = max(a_lo, 0.0)
    C = max(c_lo, 1e-300)
    D = (b_hi / (A * C)) if A > 0 else math.inf
    return ModelConstants(
        A=A, B=b_hi, C=C, A_tilde=a_hi, C_tilde=c_hi, D=D, b=b,
        source=f"sampled({samples})",
    )


def _diff_jacobian(k: int) -> np.ndarray:
    """d(diff vector)/d(theta_S) for winner-first ordering, (k-1, k)."""
    J = np.zeros((k - 1, k))
    J[:, 0] = 1.0
    J[np.arange(k - 1), np.arange(1, k)] = -1.0
    return J


def _theta_grad_norm(Gx: np.ndarray, J: np.ndarray) -> float:
    return float(np.linalg.norm(J.T @ Gx))


def _neg_log_hessian_theta(p, Gx, Hx, J) -> np.ndarray:
    """Hessian of -log p in the set's strength coordinates."""
    g_theta = J.T @ Gx
    H_theta = J.T @ Hx @ J
    return np.outer(g_theta, g_theta) / p**2 - H_theta / p


@dataclass(frozen=True)
class BoundReport:
    bound_value: float
    preconditions: dict[str, bool]
    inputs: dict = field(default_factory=dict)

    @property
    def preconditions_met(self) -> bool:
        return all(self.preconditions.values())


def mse_upper_bound(
    theorem: str,
    *,
    n: int,
    m: int,
    k: int,
    b: float,
    model: NoiseModel,
    fiedler: float,
    constants: ModelConstants | None = None,
) -> BoundReport:
    """High-probability MSE upper bound of the named theorem.

    ``fiedler`` is the algebraic connectivity of the theorem's matrix:
    constant weight 1/4 for "pair", unit weight for "luce_full",
    "rank_all" and "rank_one", and the model-matched weight for
    "general".  Bounds scale exactly as 1/m.
    """
    if theorem not in THEOREMS:
        raise ValidationError(f"theorem must be one of {THEOREMS}, got {theorem!r}")
    if fiedler <= 0:
        raise ValidationError(
            "the comparison structure is disconnected (fiedler <= 0); bound undefined"
        )
    if n < 2 or m < 1:
        raise ValidationError("need n >= 2 and m >= 1")
    nlog = n * (math.log(n) + 2.0)
    pre: dict[str, bool] = {"connected": fiedler > 0}
    inputs = {
        "n": n, "m": m, "k": k, "b": b, "model": model.spec(), "fiedler": fiedler,
        "theorem": theorem,
    }

    if theorem == "pair":
        consts = constants or pair_constants(model, b)
        D = consts.D
        value = D**2 * nlog / fiedler**2 / m
    elif theorem == "luce_full":
        D = 4.0 * k**2 * math.exp(4.0 * b)
        value = D**2 * nlog / fiedler**2 / m
    elif theorem == "general":
        consts = constants or sampled_constants(model, b, k)
        sigma = 1.0 / choice.difficulty(model, k)
        D = consts.D
        value = 32.0 * D**2 * sigma * nlog / fiedler**2 / m
        pre["fiedler_large_enough"] = fiedler >= 32.0 * (
            sigma / consts.C
        ) * n * math.log(n) / m
        inputs["sigma"] = sigma
    elif theorem == "rank_all":
        D = 16.0 * math.sqrt(2.0) * math.sqrt(k * (k - 1) ** 3) * math.exp(2.0 * b)
        value = D**2 * nlog / fiedler**2 / m
        pre["fiedler_large_enough"] = fiedler >= 128.0 * (
            k - 1
        ) ** 2 * math.exp(2.0 * b) * n * math.log(n) / m
    else:  # rank_one
        D = 4.0 * k * (k - 1) * math.exp(2.0 * b)
        value = D**2 * nlog / fiedler**2 / m
        pre["fiedler_large_enough"] = fiedler >= 8.0 * k * (
            k - 1
        ) * math.exp(2.0 * b) * n * math.log(n) / m
    inputs["D"] = D
    return BoundReport(bound_value=value, preconditions=pre, inputs=inputs)


def cramer_rao_lower_bound(
    model: NoiseModel,
    expected_adjacency_matched: WeightedAdjacency,
    m: int,
    constants: ModelConstants,
) -> BoundReport:
    """Information-theoretic lower bound from the expected adjacency.

    Evaluates (1 / (A~ C~)) * sum_{i >= 2} 1/lambda_i * (1/m) over the
    Laplacian spectrum of the matched-weight expected adjacency.
    """
    if m < 1:
        raise ValidationError("need m >= 1")
    spec = spectrum(expected_adjacency_matched)
    lam = spec.eigenvalues[1:]
    if spec.fiedler <= 0:
        raise ValidationError("disconnected expected design; lower bound undefined")
    value = float(np.sum(1.0 / lam)) / (constants.A_tilde * constants.C_tilde * m)
    return BoundReport(
        bound_value=value,
        preconditions={"connected": True},
        inputs={"m": m, "model": model.spec(), "fiedler": spec.fiedler},
    )


def cramer_rao_fixed_k(
    model: NoiseModel,
    k: int,
    unit_adjacency: WeightedAdjacency,
    m: int,
    constants: ModelConstants,
) -> BoundReport:
    """Fixed-cardinality corollary: (1-1/k) * difficulty * spectral sum / m."""
    spec = spectrum(unit_adjacency)
    lam = spec.eigenvalues[1:]
    if spec.fiedler <= 0:
        raise ValidationError("disconnected expected design; lower bound undefined")
    gamma = choice.difficulty(model, k)
    value = (
        (1.0 - 1.0 / k) * gamma * float(np.sum(1.0 / lam))
        / (constants.A_tilde * constants.C_tilde * m)
    )
    return BoundReport(
        bound_value=value,
        preconditions={"connected": True},
        inputs={"m": m, "k": k, "model": model.spec()},
    )


def cramer_rao_uniform(
    model: NoiseModel, k: int, n: int, m: int, constants: ModelConstants
) -> BoundReport:
    """Uniform-design corollary: (1-1/n)^2 * difficulty * n / m."""
    if n < 2 or m < 1:
        raise ValidationError("need n >= 2 and m >= 1")
    gamma = choice.difficulty(model, k)
    value = (
        (1.0 - 1.0 / n) ** 2 * gamma * n / m
        / (constants.A_tilde * constants.C_tilde)
    )
    return BoundReport(
        bound_value=value,
        preconditions={"connected": True},
        inputs={"n": n, "m": m, "k": k, "model": model.spec()},
    )
