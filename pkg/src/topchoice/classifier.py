"""Point-score classification of two-class strength vectors.

Each item's point score is the number of comparisons it won; sorting by
score and cutting at n/2 recovers the high- and low-strength classes.
The sample-complexity evaluators report how many observations the
score method provably needs (sufficient threshold) and how many any
method needs (necessary threshold, a factor 64 * 62 below).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from . import choice
from .comparisons import Dataset
from .errors import ValidationError
from .noise import NoiseModel

SUFFICIENT_COEFF = 64.0
NECESSARY_COEFF = 1.0 / 62.0


@dataclass(frozen=True)
class ClassificationResult:
    high_class: frozenset[int]
    low_class: frozenset[int]
    scores: np.ndarray


def point_score_classify(ds: Dataset) -> ClassificationResult:
    """Split items into halves by win counts (ties to the lower index)."""
    n = ds.n_items
    if n < 2 or n % 2 != 0:
        raise ValidationError(f"point-score classification needs an even n >= 2, got {n}")
    scores = np.bincount(ds.winners, minlength=n).astype(np.int64)
    order = np.lexsort((np.arange(n), -scores))
    high = frozenset(int(i) for i in order[: n // 2])
    low = frozenset(int(i) for i in order[n // 2 :])
    return ClassificationResult(high_class=high, low_class=low, scores=scores)


@dataclass(frozen=True)
class ComplexityReport:
    sufficient_m: float
    necessary_m: float
    conditions: dict[str, bool]
    hessian_norm_max: float | None
    hessian_points: int
    note: str = "curvature supremum sampled, not certified"


def max_hessian_norm(
    model: NoiseModel, k: int, b: float, points: int = 10_000, seed: int = 0
) -> float:
    """Sampled sup of ||d^2 p_k / dx^2||_2 over the cube [-2b, 2b]^(k-1).

    Uses a scrambled Sobol sequence; the result is a lower bound on the
    true supremum and is reported with that caveat.
    """
    km1 = int(k) - 1
    if km1 < 1:
        raise ValidationError("k must be >= 2")
    n_pts = max(2, int(points))
    sob = qmc.Sobol(d=km1, scramble=True, seed=seed)
    pts = sob.random_base2(int(math.ceil(math.log2(n_pts))))
    X = (4.0 * b) * pts - 2.0 * b
    H = choice.choice_prob_hessian_batch(model, X)
    eig = np.linalg.eigvalsh(H)
    return float(np.abs(eig).max())


def classify_sample_complexity(
    model: NoiseModel,
    k: int,
    b: float,
    n: int,
    delta: float,
    check_conditions: bool = True,
    hessian_points: int = 10_000,
    seed: int = 0,
) -> ComplexityReport:
    """Sufficient and necessary observation counts for exact recovery.

    sufficient_m = 64 * (1/b^2) (1 - 1/k) * difficulty * n (log n + log 1/delta)
    necessary_m  = the same expression with coefficient 1/62

    so sufficient_m / necessary_m == 64 * 62 exactly.  Side conditions
    on b are evaluated into flags, never raised: violated conditions
    just mean the guarantees do not formally apply.
    """
    k = int(k)
    n = int(n)
    if k < 2 or n < 2:
        raise ValidationError("need k >= 2 and n >= 2")
    if not (b > 0):
        raise ValidationError("b must be positive")
    if not (0.0 < delta <= 1.0):
        raise ValidationError("delta must lie in (0, 1]")

    gamma = choice.difficulty(model, k)
    base = (1.0 / b**2) * (1.0 - 1.0 / k) * gamma * n * (math.log(n) + math.log(1.0 / delta))
    sufficient = SUFFICIENT_COEFF * base
    necessary = NECESSARY_COEFF * base

    conditions: dict[str, bool] = {}
    hmax = None
    pts = 0
    if check_conditions:
        slope = choice.slope_at_zero(model, k)
        conditions["b_small_for_sufficiency"] = b <= 4.0 / (k**2 * slope)
        conditions["b_small_for_necessity"] = b <= 1.0 / (6.0 * k**2 * slope)
        hmax = max_hessian_norm(model, k, b, points=hessian_points, seed=seed)
        pts = hessian_points
        conditions["curvature_bounded"] = b * hmax <= slope
    return ComplexityReport(
        sufficient_m=sufficient,
        necessary_m=necessary,
        conditions=conditions,
        hessian_norm_max=hmax,
        hessian_points=pts,
    )
