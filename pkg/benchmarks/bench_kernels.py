#!/usr/bin/env python3
"""Benchmark the compiled panel kernel against the NumPy reference.

Two workloads: the raw panel-integral kernel on a representative batch,
and an end-to-end strength fit on uniform-noise data (the hot path of
the error-versus-cardinality experiment).

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from topchoice import (
    ComparisonDesign,
    EstimatorConfig,
    NoiseModel,
    ParamVector,
    estimate,
    sample_dataset,
)
from topchoice import quadrature
from topchoice._kernels import _ref
from topchoice.quadrature import _GL_NODES, _GL_WEIGHTS

try:
    from topchoice._kernels import _fast
except ImportError:
    _fast = None


def time_fn(fn, *args, repeat=5, **kw):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args, **kw)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_panels():
    rng = np.random.default_rng(0)
    g, km1, P = 100, 9, 2000
    X = np.ascontiguousarray(rng.uniform(-3, 3, (g, km1)))
    rows = rng.integers(0, g, P).astype(np.int64)
    lo = rng.uniform(-1.7, 0.5, P)
    hi = lo + rng.uniform(0.1, 1.2, P)
    print(f"panel kernel: {P} panels x {km1} cdf factors x {_GL_NODES.size} nodes")
    for kind_name, kind in (("uniform", 3), ("gaussian", 0)):
        args = (kind, 1.0, X, rows, lo, hi, _GL_NODES, _GL_WEIGHTS, True)
        t_ref = time_fn(_ref.panel_choice_integrals, *args)
        line = f"  {kind_name:9s} python {t_ref * 1e3:8.2f} ms"
        if _fast is not None:
            t_fast = time_fn(_fast.panel_choice_integrals, *args)
            line += f"   compiled {t_fast * 1e3:8.2f} ms   speedup {t_ref / t_fast:5.1f}x"
        print(line)


def bench_estimate():
    model = NoiseModel.unit_variance("uniform")
    ds = sample_dataset(
        model, ParamVector.zeros(10, 2.0), ComparisonDesign.uniform(10, 5),
        100, seed=1,
    )
    cfg = EstimatorConfig(method="mle", model=model, b=2.0)
    backends = [("python", _ref.panel_choice_integrals)]
    if _fast is not None:
        backends.insert(0, ("compiled", _fast.panel_choice_integrals))
    print("end-to-end fit: uniform noise, n=10, k=5, m=100")
    times = {}
    original = quadrature._kernels.panel_choice_integrals
    try:
        for name, kernel in backends:
            quadrature._kernels.panel_choice_integrals = kernel
            times[name] = time_fn(estimate, ds, cfg, repeat=3)
            print(f"  {name:9s} {times[name] * 1e3:8.1f} ms")
    finally:
        quadrature._kernels.panel_choice_integrals = original
    if len(times) == 2:
        print(f"  speedup {times['python'] / times['compiled']:.1f}x")


if __name__ == "__main__":
    bench_panels()
    bench_estimate()
