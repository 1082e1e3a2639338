"""Monte-Carlo experiment harness and dataset utilities.

``run_mse_vs_k`` reproduces the error-versus-cardinality protocol: for
each cardinality k it samples ``repetitions`` independent datasets of
uniform random k-sets, estimates strengths on each, and aggregates the
mean squared error with 95% confidence intervals plus the matching
theoretical upper bound.  Every (k, repetition) task draws from its own
counter-based substream, so serial and parallel runs agree bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bounds as bounds_mod
from .comparisons import (
    Dataset,
    fiedler_prefix_curve,
    ingest,
    resolve_weight,
    spectrum,
    weighted_adjacency,
)
from .errors import ValidationError
from .estimators import EstimatorConfig, estimate, mse
from .noise import GUMBEL, NoiseModel
from .sampler import (
    ComparisonDesign,
    sample_dataset,
    sample_two_class_theta,
    substream,
)


@dataclass(frozen=True)
class ExperimentSpec:
    n: int
    m: int
    k_values: tuple[int, ...]
    repetitions: int
    model: NoiseModel
    method: str = "mle"
    b: float = 5.0
    theta_mode: str = "zero"  # "zero" | "two-class" | "fixed"
    theta_b: float = 1.0  # class split for "two-class"
    theta_fixed: tuple[float, ...] | None = None
    seed: int = 0
    tol_grad: float = 1e-8
    max_iter: int = 10_000
    attach_bounds: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")
        ks = tuple(int(k) for k in self.k_values)
        if any(k < 2 or k > self.n for k in ks):
            raise ValidationError("k_values must lie in 2..n")
        object.__setattr__(self, "k_values", ks)
        if self.theta_mode not in ("zero", "two-class", "fixed"):
            raise ValidationError(f"unknown theta mode {self.theta_mode!r}")

    def echo(self) -> dict:
        return {
            "n": self.n, "m": self.m, "k_values": list(self.k_values),
            "repetitions": self.repetitions, "model": self.model.spec(),
            "method": self.method, "b": self.b, "theta_mode": self.theta_mode,
            "theta_b": self.theta_b, "seed": self.seed, "tol_grad": self.tol_grad,
        }


@dataclass(frozen=True)
class ExperimentRow:
    k: int
    mse_mean: float
    mse_stderr: float
    ci95_half_width: float
    bound_value: float | None
    n_nonconverged: int


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple[ExperimentRow, ...]
    per_rep_mse: dict[int, np.ndarray]
    per_rep_converged: dict[int, np.ndarray]
    spec: ExperimentSpec

    def manifest(self) -> dict:
        return {
            "spec": self.spec.echo(),
            "rows": [
                {
                    "k": r.k, "mse_mean": r.mse_mean, "mse_stderr": r.mse_stderr,
                    "ci95_half_width": r.ci95_half_width,
                    "bound_value": r.bound_value,
                    "n_nonconverged": r.n_nonconverged,
                }
                for r in self.rows
            ],
            "per_rep_mse": {str(k): list(map(float, v)) for k, v in self.per_rep_mse.items()},
        }

    def tsv(self) -> str:
        lines = ["k\tmse_mean\tmse_stderr\tci95_half_width\tbound_value\tn_nonconverged"]
        for r in self.rows:
            bv = "" if r.bound_value is None else repr(r.bound_value)
            lines.append(
                f"{r.k}\t{r.mse_mean!r}\t{r.mse_stderr!r}\t{r.ci95_half_width!r}"
                f"\t{bv}\t{r.n_nonconverged}"
            )
        return "\n".join(lines) + "\n"


def _theta_star(spec: ExperimentSpec, rng) -> np.ndarray:
    if spec.theta_mode == "zero":
        return np.zeros(spec.n)
    if spec.theta_mode == "two-class":
        return sample_two_class_theta(spec.n, spec.theta_b, rng).theta.theta
    th = np.asarray(spec.theta_fixed, dtype=float)
    if th.size != spec.n:
        raise ValidationError("fixed theta has the wrong length")
    return th


def _one_task(spec: ExperimentSpec, k: int, rep: int, constants) -> tuple:
    rng = substream(spec.seed, k, rep)
    theta_star = _theta_star(spec, rng)
    design = ComparisonDesign.uniform(spec.n, k)
    ds_seed = int(rng.integers(2**62))
    ds = sample_dataset(spec.model, theta_star, design, spec.m, seed=ds_seed)
    cfg = EstimatorConfig(
        method=spec.method, model=spec.model, b=spec.b,
        tol_grad=spec.tol_grad, max_iter=spec.max_iter,
        seed=int(rng.integers(2**62)),
    )
    report = estimate(ds, cfg)
    err = mse(report.theta_hat.theta, theta_star)

    bound_value = None
    if spec.attach_bounds:
        if spec.model.kind == GUMBEL:
            fied = spectrum(weighted_adjacency(ds, 1.0)).fiedler
            bound_value = bounds_mod.mse_upper_bound(
                "luce_full", n=spec.n, m=spec.m, k=k, b=spec.b,
                model=spec.model, fiedler=fied,
            ).bound_value
        else:
            fied = spectrum(
                weighted_adjacency(ds, resolve_weight("matched", spec.model))
            ).fiedler
            bound_value = bounds_mod.mse_upper_bound(
                "general", n=spec.n, m=spec.m, k=k, b=spec.b,
                model=spec.model, fiedler=fied, constants=constants,
            ).bound_value
    return k, rep, err, report.converged, bound_value


def run_mse_vs_k(spec: ExperimentSpec) -> ExperimentResult:
    """Mean squared error versus comparison-set cardinality."""
    constants_by_k = {}
    if spec.attach_bounds and spec.model.kind != GUMBEL:
        for k in spec.k_values:
            constants_by_k[k] = bounds_mod.sampled_constants(
                spec.model, spec.b, k, samples=256, seed=spec.seed
            )

    tasks = [
        (k, rep) for k in spec.k_values for rep in range(spec.repetitions)
    ]
    results = {}
    if spec.threads > 1:
        with ProcessPoolExecutor(max_workers=spec.threads) as pool:
            futures = [
                pool.submit(_one_task, spec, k, rep, constants_by_k.get(k))
                for k, rep in tasks
            ]
            for fut in futures:
                k, rep, err, conv, bv = fut.result()
                results[(k, rep)] = (err, conv, bv)
    else:
        for k, rep in tasks:
            k, rep, err, conv, bv = _one_task(spec, k, rep, constants_by_k.get(k))
            results[(k, rep)] = (err, conv, bv)

    rows = []
    per_rep = {}
    per_conv = {}
    for k in spec.k_values:
        errs = np.array([results[(k, rep)][0] for rep in range(spec.repetitions)])
        convs = np.array([results[(k, rep)][1] for rep in range(spec.repetitions)])
        bvs = [results[(k, rep)][2] for rep in range(spec.repetitions)]
        mean = float(np.sum(errs) / errs.size)
        stderr = (
            float(np.std(errs, ddof=1) / math.sqrt(errs.size)) if errs.size > 1 else 0.0
        )
        bound = None
        if spec.attach_bounds:
            bound = float(np.mean([b for b in bvs if b is not None]))
        rows.append(
            ExperimentRow(
                k=k, mse_mean=mean, mse_stderr=stderr,
                ci95_half_width=1.96 * stderr, bound_value=bound,
                n_nonconverged=int((~convs).sum()),
            )
        )
        per_rep[k] = errs
        per_conv[k] = convs
    return ExperimentResult(
        rows=tuple(rows), per_rep_mse=per_rep, per_rep_converged=per_conv, spec=spec
    )


def run_fiedler_curve(source, weight="1/k^2", step: int = 1, model=None):
    """Prefix connectivity curve for a dataset path, stream, or Dataset."""
    ds = source if isinstance(source, Dataset) else ingest(source)
    w = resolve_weight(weight, model)
    return fiedler_prefix_curve(ds, w, step=step)


def curve_tsv(points) -> str:
    lines = ["prefix_m\tfiedler"]
    for m_prefix, fied in points:
        lines.append(f"{m_prefix}\t{fied!r}")
    return "\n".join(lines) + "\n"


def top_n_restriction(ds: Dataset, top_n: int) -> Dataset:
    """Restrict to the top-n items by participation count.

    Ties break toward first appearance (lower index).  Sets shrink to
    retained members; observations whose winner was dropped, or whose
    restricted set has fewer than two members, are dropped entirely.
    """
    top_n = int(top_n)
    if top_n < 2:
        raise ValidationError("top_n must be >= 2")
    if top_n >= ds.n_items:
        return ds
    counts = np.zeros(ds.n_items, dtype=np.int64)
    for items in ds.sets:
        counts[list(items)] += 1
    order = np.lexsort((np.arange(ds.n_items), -counts))
    kept = np.sort(order[:top_n])
    remap = {int(old): new for new, old in enumerate(kept)}
    labels = [ds.item_labels[int(old)] for old in kept]
    new_obs = []
    for items, winner in zip(ds.sets, ds.winners):
        if int(winner) not in remap:
            continue
        restricted = tuple(remap[i] for i in items if i in remap)
        if len(restricted) < 2:
            continue
        new_obs.append((restricted, remap[int(winner)]))
    return Dataset(top_n, labels, new_obs)
