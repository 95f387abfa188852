"""Command-line front end.

Every command writes one JSON report (to ``--out`` or stdout) and, for
tabular results, an optional CSV (``--csv``). Exit codes: 0 success, 2 invalid
input, 3 numerical failure (a partial report is still written).
"""

import argparse
import sys
import time

import numpy as np

from . import __version__
from .counterexample import counterexample_report
from .divergences import dmax, hypothesis_testing, measured_all, smoothed_dmax, umegaki
from .errors import NumericalFailure, UnsupportedFamily, UnsupportedInstance, ValidationError
from .free_sets import axiom_check, compatibility_check, family_from_spec
from .io import atomic_write, dumps_report, load_matrix, table_to_csv
from .monotones import (
    generalized_robustness,
    log_robustness,
    regularization_trace,
    relative_entropy_of_resource,
    separably_measured_ree_lower,
    standard_robustness,
)
from .stein import conversion_rate_upper_bound, rate_table, trace_distance_to_free_trend

# fixed registry of anchor tags attached to every result
ANCHORS = {
    "umegaki": "umegaki-relative-entropy",
    "dmax": "max-relative-entropy",
    "dh": "hypothesis-testing-divergence",
    "smoothed-dmax": "smoothed-max-relative-entropy",
    "measured": "measured-relative-entropy",
    "ree": "relative-entropy-of-resource",
    "robustness": "generalized-robustness",
    "standard-robustness": "standard-robustness",
    "log-robustness": "log-robustness",
    "sep-measured": "separably-measured-ree-lower-bound",
    "regularize": "regularized-relative-entropy-of-resource",
    "stein-rate": "composite-hypothesis-testing-rate",
    "beigi-shor": "trace-distance-to-free-set",
    "convert-bound": "conversion-rate-upper-bound",
    "counterexample": "weighted-varentropy-growth",
    "axioms": "free-set-axioms",
    "compat": "compatible-pair-conditioning",
}

UNITS = {
    "umegaki": "bits",
    "dmax": "bits",
    "dh": "bits",
    "smoothed-dmax": "bits",
    "measured": "bits",
    "ree": "bits",
    "robustness": "dimensionless",
    "standard-robustness": "dimensionless",
    "log-robustness": "bits",
    "sep-measured": "bits",
}


class Failure(Exception):
    """A numerical failure carrying the partial result to report."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def _int_list(text):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _seed(text):
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def _positive(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not val > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return val


def _seed32(seed):
    # numpy generators take any int; SciPy/legacy paths want 32 bits
    return int(seed % (2**31))


# ---------------------------------------------------------------------------
# commands


def cmd_divergence(args):
    rho = load_matrix(args.rho)
    sigma = load_matrix(args.sigma)
    kind = args.kind
    if kind in ("dh", "smoothed-dmax") and args.eps is None:
        raise ValidationError(f"--eps is required for --kind {kind}")
    if kind == "umegaki":
        res = umegaki(rho, sigma)
    elif kind == "dmax":
        res = dmax(rho, sigma)
    elif kind == "dh":
        res = hypothesis_testing(rho, sigma, args.eps)
    elif kind == "smoothed-dmax":
        res = smoothed_dmax(rho, sigma, args.eps)
    else:
        res = measured_all(rho, sigma)
    cert = {"gap": res.gap, "lower_bound": res.lower_bound}
    if kind == "dh" and res.certificate is not None:
        test = res.certificate
        cert.update(
            {
                "test_type_one_error": 1.0 - float(np.real(np.vdot(test, rho))),
                "test_type_two_error": float(np.real(np.vdot(test, sigma))),
                "test_rank": int(np.sum(np.linalg.eigvalsh(test) > 1e-9)),
            }
        )
    return {"kind": kind, "eps": args.eps, "value": res.value, "certificate": cert}, None


def cmd_monotone(args):
    family = family_from_spec(args.family)
    rho = load_matrix(args.rho)
    seed = _seed32(args.seed)
    tol = args.tol or 1e-6
    kind = args.kind
    if kind == "ree":
        res = relative_entropy_of_resource(rho, family, n=args.n, tol=tol, seed=seed)
        out = {"value": res.value, "gap": res.gap, "iterations": res.iterations}
    elif kind == "sep-measured":
        if family.local_dims != (2, 2):
            raise UnsupportedFamily("sep-measured needs a two-qubit family")
        bound, details = separably_measured_ree_lower(rho, seed=seed)
        out = {"value": bound, "povm_count": details["povm_count"]}
    else:
        fn = {"robustness": generalized_robustness, "standard-robustness": standard_robustness, "log-robustness": log_robustness}[kind]
        res = fn(rho, family, tol=tol, seed=seed)
        out = {"value": res.value, "gap": res.gap, "lower": res.details.get("lower", res.lower)}
    out.update({"kind": kind, "family": family.name})
    return out, None


def cmd_regularize(args):
    family = family_from_spec(args.family)
    rho = load_matrix(args.rho)
    tr = regularization_trace(rho, family, args.n_max, tol=args.tol or 1e-6, seed=_seed32(args.seed))
    rows = [{"n": n, "d_n_bits": d, "gap": g, "spectrum_count": q} for n, d, g, q in zip(tr.levels, tr.d_n, tr.gaps, tr.spectrum_counts)]
    out = {
        "family": family.name,
        "rows": rows,
        "upper_bits": tr.upper,
        "lower_estimate_bits": tr.lower,
        "subadditive": tr.subadditive,
        "budget_exceeded": tr.budget_exceeded,
    }
    return out, (["n", "d_n_bits"], rows)


def cmd_stein_rate(args):
    family = family_from_spec(args.family)
    rho = load_matrix(args.rho)
    try:
        table = rate_table(rho, family, args.n_list, args.eps_list, tol=args.tol or 1e-6, seed=_seed32(args.seed))
    except NumericalFailure as exc:
        best = exc.best
        raise Failure(str(exc), {"family": family.name, "best_rate_bits": getattr(best, "value", None)}) from None
    out = {"family": family.name, "rows": table.rows, "slack_formula": table.slack_formula, "converse_ok": table.converse_ok}
    return out, (["n", "eps", "rate_bits", "gap"], table.rows)


def cmd_beigi_shor(args):
    family = family_from_spec(args.family)
    rho = load_matrix(args.rho)
    trend = trace_distance_to_free_trend(rho, family, args.n_max, tol=args.tol or 1e-7, seed=_seed32(args.seed))
    rows = [{"n": n, "t_n": t, "lower": lo} for n, t, lo in zip(trend.levels, trend.values, trend.lower)]
    out = {"family": family.name, "rows": rows, "nondecreasing": trend.nondecreasing()}
    return out, (["n", "t_n", "lower"], rows)


def cmd_convert_bound(args):
    family = family_from_spec(args.family)
    rho = load_matrix(args.rho)
    omega = load_matrix(args.omega)
    res = conversion_rate_upper_bound(rho, omega, family, n_max=args.n_max, tol=args.tol or 1e-6, seed=_seed32(args.seed))
    out = {
        "family": family.name,
        "rate_upper_bound": res.upper,
        "numerator_bits": res.numerator,
        "denominator_bits": res.denominator,
        "method": res.method,
    }
    return out, None


def cmd_counterexample(args):
    rep = counterexample_report(args.d, args.m, args.r, args.n_list, restarts=args.restarts, seed=args.seed)
    out = rep.to_dict()
    return out, (["n", "g"], rep.rows)


def cmd_axioms(args):
    family = family_from_spec(args.family)
    rep = axiom_check(family, args.n_max, args.samples, seed=_seed32(args.seed))
    return {"family": family.name, "n_max": args.n_max, "samples": args.samples, "axioms": rep.summary(), "all_pass": rep.all_pass}, None


def cmd_compat(args):
    family = family_from_spec(args.family)
    rep = compatibility_check(family, args.n, args.k, args.samples, seed=_seed32(args.seed), tol=args.tol or 1e-6)
    out = {"family": family.name, "n": args.n, "k": args.k, "samples": len(rep.distances), "max_distance": rep.max_distance, "passed": rep.passed}
    return out, None


COMMANDS = {
    "divergence": cmd_divergence,
    "monotone": cmd_monotone,
    "regularize": cmd_regularize,
    "stein-rate": cmd_stein_rate,
    "beigi-shor": cmd_beigi_shor,
    "convert-bound": cmd_convert_bound,
    "counterexample": cmd_counterexample,
    "axioms": cmd_axioms,
    "compat": cmd_compat,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, required=True, help="seed for every stochastic routine (required)")
    common.add_argument("--out", help="JSON report path (default: stdout)")
    common.add_argument("--csv", help="CSV path for tabular results")
    common.add_argument("--tol", type=_positive, help="solver tolerance override")
    common.add_argument("--log-base", type=int, choices=[2], default=2, help="logarithm base; fixed at 2")

    parser = argparse.ArgumentParser(prog="qresource", description="Resource-theory numerics: divergences, monotones, testing rates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("divergence", parents=[common], help="a divergence between two states")
    p.add_argument("--kind", choices=["umegaki", "dmax", "dh", "smoothed-dmax", "measured"], required=True)
    p.add_argument("--rho", required=True)
    p.add_argument("--sigma", required=True)
    p.add_argument("--eps", type=float)

    p = sub.add_parser("monotone", parents=[common], help="a resource monotone of a state")
    p.add_argument("--kind", choices=["ree", "robustness", "standard-robustness", "log-robustness", "sep-measured"], required=True)
    p.add_argument("--rho", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, default=1)

    p = sub.add_parser("regularize", parents=[common], help="per-copy relative entropy of resource")
    p.add_argument("--rho", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--n-max", type=int, default=2)

    p = sub.add_parser("stein-rate", parents=[common], help="composite hypothesis-testing rate table")
    p.add_argument("--rho", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--n-list", type=_int_list, default=[1, 2, 3])
    p.add_argument("--eps-list", type=_float_list, default=[0.05])

    p = sub.add_parser("beigi-shor", parents=[common], help="trace distance of copies to the free set")
    p.add_argument("--rho", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--n-max", type=int, default=3)

    p = sub.add_parser("convert-bound", parents=[common], help="upper bound on an asymptotic conversion rate")
    p.add_argument("--rho", required=True)
    p.add_argument("--omega", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--n-max", type=int, default=2)

    p = sub.add_parser("counterexample", parents=[common], help="weighted varentropy growth table")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--n-list", type=_int_list, default=[8, 16, 32])
    p.add_argument("--restarts", type=int, default=16)

    p = sub.add_parser("axioms", parents=[common], help="sampled axiom checks for a family")
    p.add_argument("--family", required=True)
    p.add_argument("--n-max", type=int, default=3)
    p.add_argument("--samples", type=int, default=200)

    p = sub.add_parser("compat", parents=[common], help="compatible-pair conditioning check")
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--samples", type=int, default=100)
    return parser


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "csv")}


def _emit(report, args):
    text = dumps_report(report)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def run(argv=None):
    """Parse ``argv``, run the command and return the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    report = {"command": args.command, "config": _config(args), "anchor": ANCHORS.get(getattr(args, "kind", None) or args.command)}
    kind = getattr(args, "kind", None)
    report["units"] = UNITS.get(kind, "see result fields")
    start = time.perf_counter()
    code = 0
    try:
        result, table = COMMANDS[args.command](args)
        report["status"] = "ok"
        report["result"] = result
        if args.csv and table is not None:
            atomic_write(args.csv, table_to_csv(*table))
    except (ValidationError, UnsupportedFamily, UnsupportedInstance) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (NumericalFailure, Failure) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        report["status"] = "numerical_failure"
        report["message"] = str(exc)
        partial = getattr(exc, "partial", None)
        if partial is None:
            best = getattr(exc, "best", None)
            partial = {"best": getattr(best, "value", best)}
        report["result"] = partial
        code = 3
    report["timings"] = {"wall_seconds": time.perf_counter() - start}
    try:
        _emit(report, args)
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
