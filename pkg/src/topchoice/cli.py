"""Command-line front end.

Subcommands: simulate, estimate, fiedler, classify, bounds,
experiment mse-vs-k, dataset top-n.  Exit codes: 0 on success, 2 on
validation errors, 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bounds as bounds_mod
from . import experiments
from .classifier import classify_sample_complexity, point_score_classify
from .comparisons import (
    ingest,
    resolve_weight,
    spectrum,
    weighted_adjacency,
    write_csv,
)
from .errors import NumericalError, TopChoiceError, ValidationError
from .estimators import EstimatorConfig, estimate
from .noise import GUMBEL, NoiseModel
from .sampler import (
    ComparisonDesign,
    sample_dataset,
    sample_two_class_theta,
    substream,
)

_THEOREM_ALIASES = {
    "pair": "pair",
    "luce-full": "luce_full",
    "luce_full": "luce_full",
    "general": "general",
    "rank-all": "rank_all",
    "rank_all": "rank_all",
    "rank-one": "rank_one",
    "rank_one": "rank_one",
}


def _dump_json(obj, path: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _dump_text(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _parse_theta(spec_text: str, n: int, b: float, rng):
    if spec_text == "zero":
        return np.zeros(n)
    if spec_text.startswith("two-class:"):
        split = float(spec_text.split(":", 1)[1])
        return sample_two_class_theta(n, split, rng).theta.theta
    if spec_text.startswith("file:"):
        with open(spec_text.split(":", 1)[1], "r", encoding="utf-8") as fh:
            vals = json.load(fh)
        return np.asarray(vals, dtype=float)
    raise ValidationError(f"bad theta spec {spec_text!r}")


def _parse_design(spec_text: str, n: int, k: int | None):
    if spec_text == "uniform":
        if k is None:
            raise ValidationError("uniform design needs --k")
        return ComparisonDesign.uniform(n, k)
    if spec_text.startswith("round-robin"):
        rounds = 1
        if ":" in spec_text:
            rounds = int(spec_text.split(":", 1)[1])
        return ComparisonDesign.round_robin(n, rounds)
    if spec_text.startswith("file:"):
        with open(spec_text.split(":", 1)[1], "r", encoding="utf-8") as fh:
            sets = json.load(fh)
        return ComparisonDesign.explicit(n, sets)
    raise ValidationError(f"bad design spec {spec_text!r}")


def _cmd_simulate(args) -> int:
    model = NoiseModel.parse(args.noise)
    rng = substream(args.seed, 0x51)
    design = _parse_design(args.design, args.n, args.k)
    theta = _parse_theta(args.theta, args.n, args.b, rng)
    m = args.m if design.kind == "uniform" else design.implied_m()
    ds = sample_dataset(model, theta, design, m, seed=args.seed)
    if args.output in (None, "-"):
        raise ValidationError("simulate needs --output (a CSV path plus JSON sidecar)")
    with open(args.output, "w", encoding="utf-8") as fh:
        write_csv(ds, fh)
    sidecar = {
        "theta": [float(v) for v in theta],
        "model": model.spec(),
        "design": {"kind": design.kind, "n": design.n, "k": design.k,
                   "rounds": design.rounds},
        "m": ds.m,
        "seed": args.seed,
    }
    _dump_json(sidecar, args.output + ".json")
    return 0


def _cmd_estimate(args) -> int:
    model = NoiseModel.parse(args.noise)
    ds = ingest(args.input, format=args.input_format)
    cfg = EstimatorConfig(
        method=args.method.replace("-", "_"), model=model, b=args.b,
        tol_grad=args.tol, max_iter=args.max_iter, seed=args.seed,
    )
    report = estimate(ds, cfg)
    out = {
        "items": {
            lab: float(v)
            for lab, v in zip(ds.item_labels, report.theta_hat.theta)
        },
        "loglik": report.loglik,
        "grad_norm": report.grad_norm,
        "iterations": report.iterations,
        "converged": report.converged,
        "active_box": [ds.item_labels[i] for i in report.active_box],
        "underflows": report.underflows,
        "method": args.method,
        "noise": model.spec(),
        "b": args.b,
    }
    _dump_json(out, args.output)
    return 0


def _cmd_fiedler(args) -> int:
    model = NoiseModel.parse(args.noise) if args.noise else None
    ds = ingest(args.input, format=args.input_format)
    points = experiments.run_fiedler_curve(
        ds, weight=args.weight, step=args.step, model=model
    )
    if args.format == "json":
        _dump_json([{"prefix_m": m, "fiedler": f} for m, f in points], args.output)
    else:
        _dump_text(experiments.curve_tsv(points), args.output)
    return 0


def _cmd_classify(args) -> int:
    if args.complexity:
        missing = [
            name
            for name, val in (
                ("--noise", args.noise), ("--k", args.k), ("--b", args.b),
                ("--n", args.n), ("--delta", args.delta),
            )
            if val is None
        ]
        if missing:
            raise ValidationError(
                f"classify --complexity needs {', '.join(missing)}"
            )
        model = NoiseModel.parse(args.noise)
        rep = classify_sample_complexity(
            model, args.k, args.b, args.n, args.delta,
            hessian_points=args.hessian_points, seed=args.seed,
        )
        out = {
            "sufficient_m": rep.sufficient_m,
            "necessary_m": rep.necessary_m,
            "conditions": rep.conditions,
            "hessian_norm_max": rep.hessian_norm_max,
            "hessian_points": rep.hessian_points,
            "note": rep.note,
        }
        _dump_json(out, args.output)
        return 0
    if not args.input:
        raise ValidationError("classify needs --input (or --complexity)")
    ds = ingest(args.input, format=args.input_format)
    res = point_score_classify(ds)
    out = {
        "high_class": sorted(ds.item_labels[i] for i in res.high_class),
        "low_class": sorted(ds.item_labels[i] for i in res.low_class),
        "scores": {
            lab: int(s) for lab, s in zip(ds.item_labels, res.scores)
        },
    }
    _dump_json(out, args.output)
    return 0


def _cmd_bounds(args) -> int:
    model = NoiseModel.parse(args.noise)
    theorem = _THEOREM_ALIASES.get(args.theorem)
    if theorem is None and args.theorem != "cramer-rao":
        raise ValidationError(f"unknown theorem {args.theorem!r}")

    if args.theorem == "cramer-rao":
        if model.kind == GUMBEL:
            consts = bounds_mod.luce_constants(model.scale, args.b)
        else:
            consts = bounds_mod.sampled_constants(model, args.b, args.k, seed=args.seed)
        rep = bounds_mod.cramer_rao_uniform(model, args.k, args.n, args.m, consts)
    else:
        fiedler = args.fiedler
        if args.from_data:
            ds = ingest(args.from_data, format=args.input_format)
            weight = {
                "pair": 0.25,
                "luce_full": resolve_weight("1"),
                "rank_all": resolve_weight("1"),
                "rank_one": resolve_weight("1"),
                "general": resolve_weight("matched", model),
            }[theorem]
            fiedler = spectrum(weighted_adjacency(ds, weight)).fiedler
        if fiedler is None:
            raise ValidationError("bounds needs --fiedler or --from-data")
        rep = bounds_mod.mse_upper_bound(
            theorem, n=args.n, m=args.m, k=args.k, b=args.b, model=model,
            fiedler=fiedler,
        )
    out = {
        "bound_value": rep.bound_value,
        "preconditions": rep.preconditions,
        "inputs": rep.inputs,
    }
    _dump_json(out, args.output)
    return 0


def _cmd_experiment(args) -> int:
    model = NoiseModel.parse(args.noise)
    ks = tuple(int(v) for v in args.k_values.split(","))
    theta_mode, theta_b, theta_fixed = "zero", 1.0, None
    if args.theta.startswith("two-class:"):
        theta_mode = "two-class"
        theta_b = float(args.theta.split(":", 1)[1])
    elif args.theta.startswith("file:"):
        theta_mode = "fixed"
        with open(args.theta.split(":", 1)[1], "r", encoding="utf-8") as fh:
            theta_fixed = tuple(float(v) for v in json.load(fh))
    elif args.theta != "zero":
        raise ValidationError(f"bad theta spec {args.theta!r}")
    spec = experiments.ExperimentSpec(
        n=args.n, m=args.m, k_values=ks, repetitions=args.reps, model=model,
        method=args.method.replace("-", "_"), b=args.b,
        theta_mode=theta_mode, theta_b=theta_b, theta_fixed=theta_fixed,
        seed=args.seed, threads=args.threads,
        attach_bounds=not args.no_bounds,
    )
    result = experiments.run_mse_vs_k(spec)
    if args.format == "json":
        _dump_json(result.manifest(), args.output)
    else:
        _dump_text(result.tsv(), args.output)
        if args.output not in (None, "-"):
            _dump_json(result.manifest(), args.output + ".manifest.json")
    return 0


def _cmd_dataset_top_n(args) -> int:
    ds = ingest(args.input, format=args.input_format)
    restricted = experiments.top_n_restriction(ds, args.top_n)
    if args.output in (None, "-"):
        write_csv(restricted, sys.stdout)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            write_csv(restricted, fh)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--threads", type=int, default=1,
                        help="worker processes for parallel sections")
    common.add_argument("--output", default=None, help="output path ('-' = stdout)")
    common.add_argument("--format", choices=("tsv", "json"), default="tsv")
    common.add_argument("--input-format", choices=("csv", "jsonl"), default="csv")

    parser = argparse.ArgumentParser(
        prog="topchoice",
        description="Estimation and diagnostics for top-1 choice data",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="generate a synthetic dataset (CSV + JSON sidecar)")
    p.add_argument("--noise", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--design", default="uniform")
    p.add_argument("--theta", default="zero")
    p.add_argument("--b", type=float, default=5.0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", parents=[common], help="fit strengths to a dataset")
    p.add_argument("--method", choices=("mle", "rank-all", "rank-one"), default="mle")
    p.add_argument("--noise", required=True)
    p.add_argument("--b", type=float, default=5.0)
    p.add_argument("--input", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("fiedler", parents=[common],
                       help="connectivity curve over observation prefixes")
    p.add_argument("--input", required=True)
    p.add_argument("--weight", default="1/k^2")
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--noise", default=None)
    p.set_defaults(func=_cmd_fiedler)

    p = sub.add_parser("classify", parents=[common],
                       help="point-score two-class split / sample complexity")
    p.add_argument("--input", default=None)
    p.add_argument("--complexity", action="store_true")
    p.add_argument("--noise", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--hessian-points", type=int, default=10_000)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("bounds", parents=[common], help="evaluate theorem bounds")
    p.add_argument("--theorem", required=True,
                   choices=tuple(_THEOREM_ALIASES) + ("cramer-rao",))
    p.add_argument("--noise", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--b", type=float, default=5.0)
    p.add_argument("--fiedler", type=float, default=None)
    p.add_argument("--from-data", default=None)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("experiment", parents=[common], help="experiment harness")
    exp_sub = p.add_subparsers(dest="experiment", required=True)
    pe = exp_sub.add_parser("mse-vs-k", parents=[common])
    pe.add_argument("--noise", required=True)
    pe.add_argument("--n", type=int, required=True)
    pe.add_argument("--m", type=int, required=True)
    pe.add_argument("--k-values", required=True, help="comma list, e.g. 2,3,5")
    pe.add_argument("--reps", type=int, default=100)
    pe.add_argument("--method", choices=("mle", "rank-all", "rank-one"), default="mle")
    pe.add_argument("--b", type=float, default=5.0)
    pe.add_argument("--theta", default="zero")
    pe.add_argument("--no-bounds", action="store_true")
    pe.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("dataset", parents=[common], help="dataset utilities")
    ds_sub = p.add_subparsers(dest="dataset_cmd", required=True)
    pt = ds_sub.add_parser("top-n", parents=[common])
    pt.add_argument("--input", required=True)
    pt.add_argument("--top-n", type=int, required=True)
    pt.set_defaults(func=_cmd_dataset_top_n)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TopChoiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
