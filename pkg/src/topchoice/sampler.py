"""Synthetic comparison data from a random-utility model.

Winners are drawn generatively: every member of a comparison set gets a
latent utility (strength plus an independent noise draw) and the
largest utility wins.  All randomness flows through counter-based
Philox generators derived from an integer seed via
``numpy.random.SeedSequence`` spawn keys, so identical seeds give
bit-identical datasets and per-task substreams are independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .comparisons import Dataset
from .errors import DesignError, ValidationError
from .noise import GAUSSIAN, NoiseModel

ZERO_SUM_TOL = 1e-9
BOX_SLACK = 1e-12

_U_LO = 2.0**-64
_U_HI = 1.0 - 2.0**-53


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for (seed, key...)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _rng_of(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return substream(int(seed_or_rng))


def sample_noise(model: NoiseModel, rng: np.random.Generator, size) -> np.ndarray:
    """Noise draws by inversion (Gaussian uses the standard-normal transform)."""
    if model.kind == GAUSSIAN:
        return model.scale * rng.standard_normal(size)
    u = np.clip(rng.random(size), _U_LO, _U_HI)
    return model.icdf(u)


@dataclass(frozen=True)
class ParamVector:
    """Strength vector constrained to the zero-sum box.

    Coordinates sum to zero (within 1e-9) and each lies in [-b, b] with
    a 1e-12 projection slack.
    """

    theta: np.ndarray
    b: float

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        if th.ndim != 1 or th.size < 1:
            raise ValidationError("theta must be a 1-d vector")
        if not (self.b > 0):
            raise ValidationError(f"box radius must be positive, got {self.b}")
        if abs(float(th.sum())) > ZERO_SUM_TOL:
            raise ValidationError(f"theta must sum to zero, got sum {th.sum()!r}")
        if np.any(np.abs(th) > self.b + BOX_SLACK):
            raise ValidationError("theta exceeds the box radius")
        object.__setattr__(self, "theta", th)

    @property
    def n(self) -> int:
        return self.theta.size

    @classmethod
    def zeros(cls, n: int, b: float) -> "ParamVector":
        return cls(np.zeros(int(n)), float(b))


@dataclass(frozen=True)
class ComparisonDesign:
    """How comparison sets are formed: uniform k-subsets, round-robin
    pair schedules, or an explicit list of sets."""

    kind: str  # "uniform" | "round_robin" | "explicit"
    n: int
    k: int | None = None
    rounds: int | None = None
    sets: tuple[tuple[int, ...], ...] | None = None

    @classmethod
    def uniform(cls, n: int, k: int) -> "ComparisonDesign":
        n, k = int(n), int(k)
        if not (2 <= k <= n):
            raise DesignError(f"uniform design needs 2 <= k <= n, got k={k}, n={n}")
        return cls("uniform", n, k=k)

    @classmethod
    def round_robin(cls, n: int, rounds: int = 1) -> "ComparisonDesign":
        n, rounds = int(n), int(rounds)
        if n < 2 or rounds < 1:
            raise DesignError("round robin needs n >= 2 and rounds >= 1")
        return cls("round_robin", n, rounds=rounds)

    @classmethod
    def explicit(cls, n: int, sets: Sequence[Sequence[int]]) -> "ComparisonDesign":
        n = int(n)
        frozen = []
        for s in sets:
            items = tuple(int(i) for i in s)
            if len(items) < 2 or len(set(items)) != len(items):
                raise DesignError(f"bad explicit set {items}")
            if any(i < 0 or i >= n for i in items):
                raise DesignError(f"explicit set {items} out of range for n={n}")
            frozen.append(items)
        return cls("explicit", n, sets=tuple(frozen))

    def implied_m(self) -> int | None:
        if self.kind == "round_robin":
            return self.rounds * (self.n * (self.n - 1) // 2)
        if self.kind == "explicit":
            return len(self.sets)
        return None


def _uniform_subsets(rng: np.random.Generator, m: int, n: int, k: int) -> np.ndarray:
    """m independent uniform k-subsets of range(n), rows sorted ascending."""
    out = np.empty((m, k), dtype=np.int64)
    chunk = max(1, 4_000_000 // max(n, 1))
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        keys = rng.random((stop - start, n))
        part = np.argpartition(keys, k - 1, axis=1)[:, :k]
        out[start:stop] = np.sort(part, axis=1)
    return out


def _design_sets(design: ComparisonDesign, m: int | None, rng) -> list[tuple[int, ...]]:
    if design.kind == "uniform":
        if m is None or m < 1:
            raise DesignError("uniform design needs m >= 1")
        arr = _uniform_subsets(rng, int(m), design.n, design.k)
        return [tuple(row) for row in arr]
    implied = design.implied_m()
    if m is not None and m != implied:
        raise DesignError(f"design implies m={implied}, got m={m}")
    if design.kind == "round_robin":
        pairs = [
            (i, j)
            for i in range(design.n)
            for j in range(i + 1, design.n)
        ]
        return [p for _ in range(design.rounds) for p in pairs]
    return list(design.sets)


def sample_choice(model: NoiseModel, theta, items, rng) -> int:
    """Winner of one comparison: argmax of strength + noise.

    Floating-point utility ties resolve to the lowest position index.
    """
    th = theta.theta if isinstance(theta, ParamVector) else np.asarray(theta, float)
    items = tuple(int(i) for i in items)
    if len(items) < 2:
        raise ValidationError("comparison set must have at least 2 items")
    rng = _rng_of(rng)
    utilities = th[list(items)] + sample_noise(model, rng, len(items))
    return items[int(np.argmax(utilities))]


def sample_dataset(
    model: NoiseModel,
    theta: ParamVector,
    design: ComparisonDesign,
    m: int | None = None,
    seed: int = 0,
    labels: Sequence[str] | None = None,
) -> Dataset:
    """Generate m observations under the model and design, deterministically.

    The noise for observation t is drawn after the noise for observation
    t-1 in set-position order, so a fixed seed reproduces the dataset
    bit for bit.
    """
    n = design.n
    if isinstance(theta, ParamVector):
        th = theta.theta
    else:
        th = np.asarray(theta, dtype=float)
    if th.size != n:
        raise DesignError(f"theta has {th.size} entries but design.n = {n}")
    rng = _rng_of(seed)
    sets = _design_sets(design, m, rng)

    winners = np.empty(len(sets), dtype=np.int64)
    # contiguous runs of equal cardinality are sampled as one block
    start = 0
    total = len(sets)
    while start < total:
        k = len(sets[start])
        stop = start
        while stop < total and len(sets[stop]) == k:
            stop += 1
        block = np.asarray(sets[start:stop], dtype=np.int64)
        noise = sample_noise(model, rng, (stop - start, k))
        util = th[block] + noise
        pos = np.argmax(util, axis=1)
        winners[start:stop] = block[np.arange(stop - start), pos]
        start = stop
    if labels is None:
        labels = [str(i) for i in range(n)]
    return Dataset(n, labels, zip(sets, winners))


@dataclass(frozen=True)
class TwoClassAssignment:
    theta: ParamVector
    permutation: np.ndarray
    high_class: frozenset[int]


def sample_two_class_theta(n: int, b: float, seed_or_rng=0) -> TwoClassAssignment:
    """Random +-b strength vector with equal class sizes (zero-sum)."""
    n = int(n)
    if n < 2 or n % 2 != 0:
        raise ValidationError(f"two-class strengths need an even n >= 2, got {n}")
    if not (b > 0):
        raise ValidationError("b must be positive")
    rng = _rng_of(seed_or_rng)
    perm = rng.permutation(n)
    theta = np.empty(n)
    theta[perm[: n // 2]] = b
    theta[perm[n // 2 :]] = -b
    return TwoClassAssignment(
        theta=ParamVector(theta, b),
        permutation=perm,
        high_class=frozenset(int(i) for i in perm[: n // 2]),
    )
