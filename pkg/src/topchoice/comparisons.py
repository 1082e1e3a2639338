"""Observation data model, ingestion, and comparison-graph spectra.

A dataset is a list of (comparison set, winner) observations over a
labelled item universe.  Comparison structure is summarized by the
weighted-adjacency matrix

    m_ij = (n/m) * sum_k w(k) * #(size-k observations containing {i,j})

whose graph Laplacian's second-smallest eigenvalue (the Fiedler value)
measures how well connected the comparisons are.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from . import choice
from .errors import ParseError, ValidationError
from .noise import NoiseModel

FIEDLER_POSITIVE_TOL = 1e-10
MAX_EIGEN_N = 2000


class Observation(NamedTuple):
    items: tuple[int, ...]
    winner: int


class Dataset:
    """Immutable item universe plus comparison observations.

    Observations are stored compactly (tuple of index tuples plus a
    winner array); ``observations`` materializes ``Observation`` records
    on demand.  ``n_items`` may exceed the set of items actually
    appearing; every index must lie in ``range(n_items)``.
    """

    __slots__ = ("n_items", "item_labels", "sets", "winners", "_groups", "_obs")

    def __init__(self, n_items: int, item_labels: Sequence[str], observations):
        n_items = int(n_items)
        labels = tuple(str(s) for s in item_labels)
        if len(labels) != n_items:
            raise ValidationError(
                f"{len(labels)} labels for {n_items} items"
            )
        if len(set(labels)) != n_items:
            raise ValidationError("item labels must be distinct")
        sets = []
        winners = []
        for t, obs in enumerate(observations):
            if isinstance(obs, Observation):
                items, winner = obs.items, obs.winner
            else:
                items, winner = obs
            items = tuple(int(i) for i in items)
            winner = int(winner)
            if len(items) < 2:
                raise ValidationError(f"observation {t}: comparison set has < 2 items")
            if len(set(items)) != len(items):
                raise ValidationError(f"observation {t}: duplicate items in set")
            if winner not in items:
                raise ValidationError(f"observation {t}: winner {winner} not in set")
            if any(i < 0 or i >= n_items for i in items):
                raise ValidationError(f"observation {t}: item index out of range")
            sets.append(items)
            winners.append(winner)
        self.n_items = n_items
        self.item_labels = labels
        self.sets = tuple(sets)
        self.winners = np.asarray(winners, dtype=np.int64)
        self._groups = None
        self._obs = None

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def observations(self) -> tuple[Observation, ...]:
        if self._obs is None:
            self._obs = tuple(
                Observation(s, int(w)) for s, w in zip(self.sets, self.winners)
            )
        return self._obs

    def groups(self) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        """Observations grouped by cardinality: {k: (sets (g,k), winners (g,))}.

        Within each group the original observation order is preserved.
        """
        if self._groups is None:
            by_k: dict[int, tuple[list, list]] = {}
            for s, w in zip(self.sets, self.winners):
                bucket = by_k.setdefault(len(s), ([], []))
                bucket[0].append(s)
                bucket[1].append(w)
            self._groups = {
                k: (np.asarray(ss, dtype=np.int64), np.asarray(ww, dtype=np.int64))
                for k, (ss, ww) in sorted(by_k.items())
            }
        return self._groups

    def cardinalities(self) -> tuple[int, ...]:
        return tuple(sorted({len(s) for s in self.sets}))

    def __repr__(self):
        return f"Dataset(n_items={self.n_items}, m={self.m})"


# -- ingestion ---------------------------------------------------------


def _lines(source) -> Iterable[str]:
    if hasattr(source, "read"):
        yield from source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh


def ingest(source, format: str = "csv") -> Dataset:
    """Read a dataset from a path or stream.

    ``csv``: one observation per row, ``winner,member1,member2,...``
    where the winner must equal one of the members.  Lines starting with
    ``#`` are ignored.  ``jsonl``: one JSON object per line with keys
    ``set`` (list of labels) and ``winner``.

    Labels are mapped to indices 0..n-1 in order of first appearance in
    the input stream (the winner field is scanned first on CSV rows).
    """
    if format not in ("csv", "jsonl"):
        raise ValidationError(f"unknown dataset format {format!r}")
    index: dict[str, int] = {}
    obs: list[tuple[tuple[int, ...], int]] = []

    def lookup(label: str, line_no: int) -> int:
        if label == "":
            raise ParseError("empty item label", line_no)
        if label not in index:
            index[label] = len(index)
        return index[label]

    for line_no, raw in enumerate(_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if format == "csv":
            fields = [f.strip() for f in line.split(",")]
            if len(fields) < 3:
                raise ParseError(
                    f"expected 'winner,member1,member2,...', got {line!r}", line_no
                )
            winner_label, member_labels = fields[0], fields[1:]
        else:
            try:
                rec = json.loads(line)
                winner_label = str(rec["winner"])
                member_labels = [str(x) for x in rec["set"]]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"bad JSON observation: {exc}", line_no) from None
        winner_idx = lookup(winner_label, line_no)
        members = [lookup(x, line_no) for x in member_labels]
        if len(set(members)) != len(members):
            raise ParseError("duplicate items in comparison set", line_no)
        if len(members) < 2:
            raise ParseError("comparison set must have at least 2 items", line_no)
        if winner_idx not in members:
            raise ParseError(
                f"winner {winner_label!r} is not a member of the set", line_no
            )
        obs.append((tuple(members), winner_idx))

    labels = [lab for lab, _ in sorted(index.items(), key=lambda kv: kv[1])]
    if not obs and not labels:
        warnings.warn("ingested an empty dataset (no observations)", stacklevel=2)
    return Dataset(len(labels), labels, obs)


def write_csv(ds: Dataset, stream) -> None:
    """Emit the comparison CSV format (winner first, then members)."""
    stream.write("#winner,members...\n")
    for items, winner in zip(ds.sets, ds.winners):
        row = [ds.item_labels[int(winner)]] + [ds.item_labels[i] for i in items]
        stream.write(",".join(row) + "\n")


# -- weight functions --------------------------------------------------


def weight_one(k: int) -> float:
    return 1.0


def weight_inverse_square(k: int) -> float:
    return 1.0 / (k * k)


def weight_constant(a: float) -> Callable[[int], float]:
    a = float(a)

    def w(k: int) -> float:
        return a

    w.__name__ = f"weight_constant_{a}"
    return w


def model_matched_weight(model: NoiseModel) -> Callable[[int], float]:
    """The (k * slope_at_zero)^2 weight family for a noise model."""

    def w(k: int) -> float:
        return choice.matched_weight(model, k)

    return w


def resolve_weight(spec, model: NoiseModel | None = None) -> Callable[[int], float]:
    """Accept a callable, a constant, or a spec string for w(k).

    Strings: ``1``, ``1/k^2`` (alias ``1/k2``), ``const:<a>``,
    ``matched`` (requires a noise model).
    """
    if callable(spec):
        return spec
    if isinstance(spec, (int, float)):
        return weight_constant(float(spec))
    text = str(spec).strip().lower()
    if text in ("1", "one"):
        return weight_one
    if text in ("1/k^2", "1/k2", "1/k**2"):
        return weight_inverse_square
    if text.startswith("const:") or text.startswith("const="):
        return weight_constant(float(text[6:]))
    if text in ("matched", "wstar", "w*"):
        if model is None:
            raise ValidationError("the matched weight needs a noise model")
        return model_matched_weight(model)
    raise ValidationError(f"unknown weight spec {spec!r}")


# -- adjacency / Laplacian ---------------------------------------------


@dataclass(frozen=True)
class WeightedAdjacency:
    """Symmetric nonnegative matrix with zero diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.entries, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValidationError("adjacency must be square")
        if not np.allclose(A, A.T, atol=1e-12):
            raise ValidationError("adjacency must be symmetric")
        if np.any(np.diag(A) != 0):
            raise ValidationError("adjacency must have zero diagonal")
        if np.any(A < 0):
            raise ValidationError("adjacency entries must be nonnegative")
        object.__setattr__(self, "entries", A)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class LaplacianSpectrum:
    eigenvalues: np.ndarray
    fiedler: float


def _pair_counts(ds: Dataset, weight: Callable[[int], float]) -> np.ndarray:
    """sum_k w(k) * m_ij(k) as a dense symmetric matrix (no n/m factor)."""
    n = ds.n_items
    C = np.zeros((n, n))
    for k, (sets, _) in ds.groups().items():
        wk = float(weight(k))
        if wk == 0.0:
            continue
        for i in range(k):
            for j in range(i + 1, k):
                np.add.at(C, (sets[:, i], sets[:, j]), wk)
    C = C + C.T
    return C


def weighted_adjacency(ds: Dataset, weight) -> WeightedAdjacency:
    """The (n/m)-normalized, w(k)-weighted pair co-occurrence matrix."""
    if ds.m == 0:
        raise ValidationError("cannot build an adjacency from an empty dataset")
    w = resolve_weight(weight)
    C = _pair_counts(ds, w)
    return WeightedAdjacency(C * (ds.n_items / ds.m))


def laplacian(adj: WeightedAdjacency | np.ndarray) -> np.ndarray:
    A = adj.entries if isinstance(adj, WeightedAdjacency) else np.asarray(adj, float)
    return np.diag(A.sum(axis=1)) - A


def spectrum(adj: WeightedAdjacency | np.ndarray) -> LaplacianSpectrum:
    """Full symmetric eigendecomposition of the Laplacian.

    Dense solve only; inputs beyond n = 2000 are rejected (the intended
    scales are a few hundred items).
    """
    L = laplacian(adj)
    n = L.shape[0]
    if n > MAX_EIGEN_N:
        raise ValidationError(
            f"dense eigensolve supports n <= {MAX_EIGEN_N}, got n = {n}"
        )
    if n == 0:
        raise ValidationError("empty matrix has no spectrum")
    vals = np.linalg.eigvalsh(L)
    fied = float(vals[1]) if n >= 2 else 0.0
    return LaplacianSpectrum(eigenvalues=vals, fiedler=fied)


def fiedler_value(adj: WeightedAdjacency | np.ndarray) -> float:
    return spectrum(adj).fiedler


# -- prefix curves and connectivity ------------------------------------


def fiedler_prefix_curve(
    ds: Dataset, weight, step: int = 1
) -> list[tuple[int, float]]:
    """Fiedler value of the adjacency built from each observation prefix.

    One point per prefix length step, 2*step, ..., m (m always
    included).  The n/m normalization keeps m fixed at the full dataset
    size for every prefix, so the curve grows as comparisons accumulate;
    the final point therefore equals the full-dataset Fiedler value.
    """
    step = int(step)
    if step < 1:
        raise ValidationError("step must be >= 1")
    m = ds.m
    if m == 0:
        return []
    w = resolve_weight(weight)
    n = ds.n_items
    marks = sorted(set(range(step, m + 1, step)) | {m})
    C = np.zeros((n, n))
    out = []
    pos = 0
    for mark in marks:
        while pos < mark:
            items = ds.sets[pos]
            wk = float(w(len(items)))
            for a_i in range(len(items)):
                for b_i in range(a_i + 1, len(items)):
                    i, j = items[a_i], items[b_i]
                    C[i, j] += wk
                    C[j, i] += wk
            pos += 1
        out.append((mark, spectrum(C * (n / m)).fiedler))
    return out


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.count = n

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb
            self.count -= 1


def connected_components(ds: Dataset) -> list[tuple[int, ...]]:
    uf = _UnionFind(ds.n_items)
    for items in ds.sets:
        for other in items[1:]:
            uf.union(items[0], other)
    comps: dict[int, list[int]] = {}
    for i in range(ds.n_items):
        comps.setdefault(uf.find(i), []).append(i)
    return [tuple(v) for v in comps.values()]


def connectivity_threshold(ds: Dataset, weight=weight_one) -> int | None:
    """Smallest prefix length whose Fiedler value is strictly positive.

    Positivity of the Fiedler value is equivalent to connectivity of the
    (unweighted) support graph, which is what is scanned here; ``None``
    when even the full dataset leaves the graph disconnected.
    """
    if ds.n_items < 2:
        raise ValidationError("connectivity needs at least 2 items")
    uf = _UnionFind(ds.n_items)
    for t, items in enumerate(ds.sets, start=1):
        for other in items[1:]:
            uf.union(items[0], other)
        if uf.count == 1:
            return t
    return None


# -- unbiased designs ---------------------------------------------------


@dataclass(frozen=True)
class UnbiasedDesign:
    """Expected adjacency of an unbiased design plus its closed-form
    connectivity prediction.

    ``fiedler`` carries the closed form (1 - 1/n) * sum_k w(k) k (k-1)
    mu(k).  Note that a dense eigensolve of ``adjacency`` yields
    (n/(n-1)) * sum_k w(k) k (k-1) mu(k) instead; the two differ by the
    factor n^2/(n-1)^2 and both are exposed deliberately (see README).
    """

    adjacency: WeightedAdjacency
    fiedler: float
    mix: dict[int, float] = field(default_factory=dict)


def expected_adjacency_unbiased(
    n: int, cardinality_mix: dict[int, float], weight
) -> UnbiasedDesign:
    """Expected adjacency when every size-k set is equally likely.

    ``cardinality_mix`` maps k to the fraction mu(k) of observations of
    that cardinality and must sum to one.
    """
    n = int(n)
    if n < 2:
        raise ValidationError("need n >= 2")
    mix = {int(k): float(v) for k, v in cardinality_mix.items()}
    total = math.fsum(mix.values())
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"cardinality mix sums to {total!r}, expected 1")
    for k in mix:
        if k < 2 or k > n:
            raise ValidationError(f"cardinality {k} out of range 2..{n}")
    w = resolve_weight(weight)
    s = math.fsum(w(k) * k * (k - 1) * mu for k, mu in mix.items())
    entry = s / (n - 1)
    A = np.full((n, n), entry)
    np.fill_diagonal(A, 0.0)
    return UnbiasedDesign(
        adjacency=WeightedAdjacency(A), fiedler=(1.0 - 1.0 / n) * s, mix=mix
    )
