"""Command-line orchestration: scans, certificates, reports, figures.

Subcommands: density, cdf, sample, exact-law, distance, stein, bounds,
rate-scan, quickselect, tree, sandwich.  Outputs are CSV or JSON
(``--format``); ``--plot`` renders a matplotlib figure next to the
delimited output.  A ``--config`` file of ``key = value`` lines presets any
flag; explicit flags win.  Exit codes: 0 ok, 2 domain error, 3 accuracy
error, 4 resource error, 5 integrity violation.

Models are cached in-process per theta; set the DICKMAN_CACHE environment
variable to a directory to persist them as JSON between runs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import apps, bounds, figures, lattice, metrics, stein
from . import distribution as distmod
from .errors import DickmanError, DomainError, IntegrityError, ResourceError
from .samplers import DEFAULT_PERPETUITY_ITERATIONS, SeededRng, SumSpec

_MAX_SCAN_N = 4096


# ---------------------------------------------------------------------------
# model cache (process memo + optional on-disk JSON via DICKMAN_CACHE)
# ---------------------------------------------------------------------------

def cached_model(theta: float, x_max: float = 40.0) -> distmod.DickmanModel:
    cache_dir = os.environ.get("DICKMAN_CACHE")
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        name = f"model_theta{theta:.6g}_xmax{x_max:.6g}.json"
        path = os.path.join(cache_dir, name)
        if os.path.exists(path):
            with open(path) as fh:
                return distmod.model_from_json(fh.read())
        model = distmod.get_model(theta, x_max=x_max)
        with open(path, "w") as fh:
            fh.write(distmod.model_to_json(model))
        return model
    return distmod.get_model(theta, x_max=x_max)


def _model_for_support(theta: float, support_max: float) -> distmod.DickmanModel:
    # round the domain up to 64-multiples so scan points share one model
    needed = max(40.0, support_max + 2.0)
    return cached_model(theta, x_max=64.0 * math.ceil(needed / 64.0)
                        if needed > 40.0 else 40.0)


# ---------------------------------------------------------------------------
# rate scans
# ---------------------------------------------------------------------------

@dataclass
class RateScanResult:
    family: str
    theta: float
    beta: float
    l: int
    n_values: list
    d_k_values: list
    budgets: list
    compensated: list
    fitted_exponent: float
    fitted_stderr: float
    regime_expected: str

    def to_json(self) -> str:
        return json.dumps({
            "family": self.family, "theta": self.theta, "beta": self.beta,
            "l": self.l, "n_values": self.n_values,
            "d_k_values": self.d_k_values, "budgets": self.budgets,
            "compensated": self.compensated,
            "fitted_exponent": self.fitted_exponent,
            "fitted_stderr": self.fitted_stderr,
            "regime_expected": self.regime_expected,
        })


def _regime(theta: float, beta: float):
    if theta >= 1.0 and beta == 0.0:
        return "1/n", lambda n, d, l: d * n
    if theta >= 1.0:
        return "log(n/l)/n", lambda n, d, l: d * n / (1.0 + abs(beta) * math.log(n / l))
    return "1/n^theta", lambda n, d, l: d * n**theta


def _scan_point(args):
    theta, beta, l, family, n, tail_budget = args
    spec = SumSpec(theta, beta, l, n, family)
    if family == "bernoulli":
        law = lattice.exact_bernoulli(spec)
    else:
        law = lattice.exact_poisson(spec, tail_budget)
    model = _model_for_support(theta, law.support_max)
    rep = metrics.kolmogorov_exact(law, model)
    return n, rep.d_k, rep.error_budget


def rate_scan(theta: float, beta: float, l: int, family: str, n_grid,
              tail_budget: float = 1e-10, jobs: int = 1) -> RateScanResult:
    """Exact d_K on a grid of n, with regime-compensated values and slope fit."""
    n_grid = [int(n) for n in n_grid]
    if sorted(n_grid) != n_grid or len(set(n_grid)) != len(n_grid):
        raise DomainError("n grid must be strictly increasing")
    if not n_grid:
        raise DomainError("n grid must be non-empty")
    if max(n_grid) > _MAX_SCAN_N:
        raise ResourceError(f"scan points above n = {_MAX_SCAN_N} exceed the "
                            "compute budget", completed=[])

    points = [(theta, beta, l, family, n, tail_budget) for n in n_grid]
    results = []
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_scan_point, points))
        else:
            for p in points:
                results.append(_scan_point(p))
    except ResourceError as exc:
        raise ResourceError(str(exc), completed=sorted(results)) from exc
    results.sort()

    regime, compensate = _regime(theta, beta)
    ns = [r[0] for r in results]
    ds = [r[1] for r in results]
    budgets = [r[2] for r in results]
    comp = [compensate(n, d, l) for n, d in zip(ns, ds)]
    if len(ns) >= 2:
        logn = np.log(np.asarray(ns, dtype=float))
        logd = np.log(np.asarray(ds, dtype=float))
        slope, intercept = np.polyfit(logn, logd, 1)
        fitted = intercept + slope * logn
        dof = max(len(ns) - 2, 1)
        sigma2 = float(np.sum((logd - fitted) ** 2)) / dof
        stderr = math.sqrt(sigma2 / float(np.sum((logn - logn.mean()) ** 2)))
    else:
        slope, stderr = math.nan, math.inf  # a slope needs two points
    return RateScanResult(family=family, theta=theta, beta=beta, l=l,
                          n_values=ns, d_k_values=ds, budgets=budgets,
                          compensated=comp, fitted_exponent=float(slope),
                          fitted_stderr=stderr, regime_expected=regime)


def sandwich_report(theta: float, beta: float, l: int, n: int, family: str,
                    tail_budget: float = 1e-10) -> dict:
    """{lower, exact, upper} with budgets; raises IntegrityError on disorder."""
    spec = SumSpec(theta, beta, l, n, family)
    if family == "bernoulli":
        law = lattice.exact_bernoulli(spec)
    elif family == "poisson":
        law = lattice.exact_poisson(spec, tail_budget)
    else:
        raise DomainError(f"sandwich covers bernoulli/poisson, got {family!r}")
    model = _model_for_support(theta, law.support_max)
    rep = metrics.kolmogorov_exact(law, model)
    probe = metrics.interval_probe(law, model)
    lower_parts = {"interval_probe": probe}
    if theta <= 1.0:
        cert = bounds.lower_certificate(theta, l, n, family=family)
        lower_parts["lower_certificate"] = cert.value
    lower = max(lower_parts.values())
    upper_cert = bounds.upper_certificate(theta, beta, l, n, family=family)
    record = {
        "theta": theta, "beta": beta, "l": l, "n": n, "family": family,
        "lower": lower, "lower_parts": lower_parts,
        "exact": rep.d_k, "exact_budget": rep.error_budget,
        "argmax_point": rep.argmax_point, "side": rep.side,
        "upper": upper_cert.value,
        "upper_constants": upper_cert.constants_used,
    }
    if lower - rep.error_budget > rep.d_k or rep.d_k > upper_cert.value + rep.error_budget:
        raise IntegrityError(f"sandwich ordering violated: {record}")
    return record


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _rows_to_csv(header, rows):
    lines = [",".join(header)]
    lines += [",".join(repr(float(c)) if isinstance(c, (float, np.floating))
                       else str(c) for c in row)
              for row in rows]
    return "\n".join(lines) + "\n"


def _emit(args, header, rows, json_obj):
    if args.format == "json":
        _write_text(args.out, json.dumps(json_obj, indent=2) + "\n")
    else:
        _write_text(args.out, _rows_to_csv(header, rows))


def _plot_path(args, default_stem):
    if args.out not in (None, "-"):
        stem, _ = os.path.splitext(args.out)
        return stem + ".png"
    return default_stem + ".png"


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_density(args):
    model = cached_model(args.theta, x_max=args.x_max)
    xs = np.linspace(args.lo, args.hi, args.points)
    rho_vals = distmod.rho(model, xs)
    pdf_vals = distmod.pdf(model, xs)
    rows = list(zip(xs.tolist(), rho_vals.tolist(), pdf_vals.tolist()))
    _emit(args, ["x", "rho", "pdf"], rows,
          {"theta": args.theta, "x": xs.tolist(), "rho": rho_vals.tolist(),
           "pdf": pdf_vals.tolist(), "norm_defect": model.norm_defect})
    if args.plot:
        figures.plot_density(xs, rho_vals, pdf_vals, args.theta,
                             _plot_path(args, "density"))
    return 0


def _cmd_cdf(args):
    model = cached_model(args.theta, x_max=args.x_max)
    xs = np.linspace(args.lo, args.hi, args.points)
    vals = distmod.cdf(model, xs)
    _emit(args, ["x", "cdf"], list(zip(xs.tolist(), vals.tolist())),
          {"theta": args.theta, "x": xs.tolist(), "cdf": vals.tolist(),
           "cdf_error": model.cdf_error})
    if args.plot:
        figures.plot_cdf(xs, vals, args.theta, _plot_path(args, "cdf"))
    return 0


def _cmd_sample(args):
    from .samplers import perpetuity_sample, weighted_sum_sample

    rng = SeededRng(args.seed)
    if args.kind == "perpetuity":
        draws = perpetuity_sample(args.theta, args.iterations, rng,
                                  size=args.count)
    else:
        spec = SumSpec(args.theta, args.beta, args.l, args.n, args.kind,
                       weight_law=args.weight_law)
        draws = weighted_sum_sample(spec, rng, size=args.count)
    draws = np.atleast_1d(draws)
    if args.binary:
        payload = draws.astype("<f8").tobytes()
        if args.out in (None, "-"):
            sys.stdout.buffer.write(payload)
        else:
            with open(args.out, "wb") as fh:
                fh.write(payload)
    else:
        _write_text(args.out, "\n".join(repr(v) for v in draws.tolist()) + "\n")
    return 0


def _build_law(args):
    spec = SumSpec(args.theta, args.beta, args.l, args.n, args.family)
    if args.family == "bernoulli":
        return lattice.exact_bernoulli(spec)
    return lattice.exact_poisson(spec, args.tail_budget)


def _cmd_exact_law(args):
    law = _build_law(args)
    if args.binary:
        if args.out in (None, "-"):
            raise DomainError("binary law export requires --out PATH")
        lattice.to_binary(law, args.out)
    elif args.out not in (None, "-") and args.format == "csv":
        lattice.to_csv(law, args.out)
    else:
        rows = [(j, j / law.scale_n, p) for j, p in enumerate(law.pmf)]
        _emit(args, ["j", "x", "pmf"], rows,
              {"scale_n": law.scale_n, "truncation_eps": law.truncation_eps,
               "pmf": law.pmf.tolist()})
    if args.plot:
        figures.plot_lattice(law, _plot_path(args, "exact_law"))
    return 0


def _cmd_distance(args):
    law = _build_law(args)
    model = _model_for_support(args.theta, law.support_max)
    rep = metrics.kolmogorov_exact(law, model)
    obj = {"d_k": rep.d_k, "error_budget": rep.error_budget,
           "argmax_point": rep.argmax_point, "side": rep.side}
    _emit(args, list(obj.keys()), [tuple(obj.values())], obj)
    return 0


def _cmd_stein(args):
    model = cached_model(args.theta)
    sol = stein.solve_indicator(model, args.a, tol=args.tol,
                                x_upper=args.x_upper)
    xs = np.asarray(sol.grid.breakpoints)
    g_vals = sol.g(xs)
    f_vals = sol.f(xs)
    f1_vals = sol.f1(xs)
    f2_vals = sol.f2(xs)
    res = np.full_like(xs, np.nan)
    ok = (xs > 0) & (np.abs(xs - args.a) > 2.0 / 512.0) & (xs + 1.0 <= sol._x_upper)
    res[ok] = [stein.stein_residual(sol, model, float(x)) for x in xs[ok]]
    rows = list(zip(xs.tolist(), g_vals.tolist(), f_vals.tolist(),
                    f1_vals.tolist(), f2_vals.tolist(), res.tolist()))
    _emit(args, ["x", "g", "f", "f1", "f2", "residual"], rows,
          {"theta": args.theta, "a": args.a,
           "series_terms_used": sol.series_terms_used,
           "term_tail_bound": sol.term_tail_bound,
           "x": xs.tolist(), "g": g_vals.tolist(), "f": f_vals.tolist(),
           "residual_max": float(np.nanmax(np.abs(res)))})
    if args.plot:
        figures.plot_stein(xs, g_vals, f_vals, f1_vals, f2_vals, res,
                           args.theta, args.a, _plot_path(args, "stein"))
    return 0


def _cmd_bounds(args):
    if args.kind == "upper":
        cert = bounds.upper_certificate(args.theta, args.beta, args.l, args.n,
                                        family=args.family)
        obj = json.loads(cert.to_json())
    elif args.kind == "lower":
        cert = bounds.lower_certificate(args.theta, args.l, args.n,
                                        family=args.family)
        obj = json.loads(cert.to_json())
    else:
        value = bounds.optimality_main_term(args.theta, args.beta, args.l,
                                            args.n, family=args.family)
        obj = {"kind": "main_term", "value": value, "reference_only": True,
               "theta": args.theta, "beta": args.beta, "l": args.l, "n": args.n}
    _write_text(args.out, json.dumps(obj, indent=2) + "\n")
    return 0


def _cmd_rate_scan(args):
    grid = [int(tok) for tok in str(args.n_grid).split(",") if tok]
    result = rate_scan(args.theta, args.beta, args.l, args.family, grid,
                       tail_budget=args.tail_budget, jobs=args.jobs)
    rows = list(zip(result.n_values, result.d_k_values, result.budgets,
                    result.compensated))
    _emit(args, ["n", "d_k", "budget", "compensated"], rows,
          json.loads(result.to_json()))
    if args.plot:
        figures.plot_rate_scan(result, _plot_path(args, "rate_scan"))
    return 0


def _cmd_quickselect(args):
    rng = SeededRng(args.seed)
    if args.mode == "direct":
        counts = apps.quickselect_direct_many(args.n, args.runs, rng)
    else:
        counts = apps.quickselect_records_many(args.n, args.runs, rng)
    rows = [(i, args.seed, args.n, int(c)) for i, c in enumerate(counts)]
    summary = {"mode": args.mode, "n": args.n, "runs": args.runs,
               "seed": args.seed, "mean": float(counts.mean()),
               "expected_mean": apps.expected_comparisons(args.n),
               "normalized_mean": float(counts.mean() / args.n - 1.0)}
    if args.format == "json":
        _write_text(args.out, json.dumps(summary, indent=2) + "\n")
    else:
        _write_text(args.out, _rows_to_csv(["run", "seed", "n", "count"], rows))
    return 0


def _cmd_tree(args):
    rng = SeededRng(args.seed)
    if args.mode == "direct":
        if args.beta != 0.0:
            raise DomainError("direct tree growth is the uniform-attachment "
                              "case; it requires beta = 0")
        depths = apps.recursive_tree_depth_many(args.n, args.runs, rng)
    else:
        depths = apps.weighted_depth_bernoulli_many(args.n, args.beta,
                                                    args.runs, rng)
    rows = [(i, args.seed, args.n, int(d)) for i, d in enumerate(depths)]
    summary = {"mode": args.mode, "n": args.n, "beta": args.beta,
               "runs": args.runs, "seed": args.seed,
               "mean": float(depths.mean()),
               "expected_mean": apps.expected_weighted_depth(args.n, args.beta)}
    if args.format == "json":
        _write_text(args.out, json.dumps(summary, indent=2) + "\n")
    else:
        _write_text(args.out, _rows_to_csv(["run", "seed", "n", "depth"], rows))
    return 0


def _cmd_sandwich(args):
    record = sandwich_report(args.theta, args.beta, args.l, args.n,
                             args.family, tail_budget=args.tail_budget)
    _write_text(args.out, json.dumps(record, indent=2) + "\n")
    if args.plot:
        figures.plot_sandwich(record, _plot_path(args, "sandwich"))
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _read_config(path) -> dict:
    """key = value lines; '#' comments; numbers parsed, lists stay strings."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"bad config line: {raw.rstrip()}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            try:
                out[key] = int(value)
            except ValueError:
                try:
                    out[key] = float(value)
                except ValueError:
                    out[key] = value
    return out


def _add_common(parser):
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", default=None, help="output path ('-' = stdout)")
    parser.add_argument("--plot", action="store_true",
                        help="render a PNG figure next to the output")
    parser.add_argument("--seed", type=int, default=20240901)


def _add_spec_flags(parser, family=True):
    parser.add_argument("--theta", type=float, default=1.0)
    parser.add_argument("--beta", type=float, default=0.0)
    parser.add_argument("--l", type=int, default=1)
    parser.add_argument("--n", type=int, default=100)
    if family:
        parser.add_argument("--family", choices=("bernoulli", "poisson"),
                            default="bernoulli")
    parser.add_argument("--tail-budget", type=float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dickman",
        description="Generalized Dickman laws, exact Kolmogorov distances "
                    "and convergence-rate certificates")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="rho and density values")
    _add_common(p)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--x-max", type=float, default=40.0)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=6.0)
    p.add_argument("--points", type=int, default=601)
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("cdf", help="CDF values")
    _add_common(p)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--x-max", type=float, default=40.0)
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=6.0)
    p.add_argument("--points", type=int, default=601)
    p.set_defaults(func=_cmd_cdf)

    p = sub.add_parser("sample", help="draw random variates")
    _add_common(p)
    p.add_argument("--kind", default="perpetuity",
                   choices=("perpetuity", "bernoulli", "poisson",
                            "bernoulli_random_weight", "poisson_random_weight"))
    _add_spec_flags(p, family=False)
    p.add_argument("--weight-law", default="deterministic",
                   choices=("deterministic", "uniform_0_2k", "poisson_mean_k"))
    p.add_argument("--iterations", type=int,
                   default=DEFAULT_PERPETUITY_ITERATIONS)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--binary", action="store_true",
                   help="raw little-endian float64 stream")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("exact-law", help="exact lattice law of a weighted sum")
    _add_common(p)
    _add_spec_flags(p)
    p.add_argument("--binary", action="store_true")
    p.set_defaults(func=_cmd_exact_law)

    p = sub.add_parser("distance", help="exact Kolmogorov distance")
    _add_common(p)
    _add_spec_flags(p)
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("stein", help="fixed-point series solution grid")
    _add_common(p)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--x-upper", type=float, default=None)
    p.set_defaults(func=_cmd_stein)

    p = sub.add_parser("bounds", help="bound certificates")
    _add_common(p)
    p.add_argument("--kind", choices=("upper", "lower", "main-term"),
                   default="upper")
    _add_spec_flags(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("rate-scan", help="d_K rate scan over n")
    _add_common(p)
    _add_spec_flags(p)
    p.add_argument("--n-grid", default="128,256,512,1024,2048")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_rate_scan)

    p = sub.add_parser("quickselect", help="comparison-count simulations")
    _add_common(p)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--mode", choices=("direct", "records"), default="records")
    p.set_defaults(func=_cmd_quickselect)

    p = sub.add_parser("tree", help="weighted depth simulations")
    _add_common(p)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--mode", choices=("bernoulli", "direct"), default="bernoulli")
    p.set_defaults(func=_cmd_tree)

    p = sub.add_parser("sandwich", help="lower <= exact <= upper report")
    _add_common(p)
    _add_spec_flags(p)
    p.set_defaults(func=_cmd_sandwich)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    parser.add_argument("--config", default=None, help="key = value preset file")
    try:
        if known.config:
            presets = _read_config(known.config)
            for action in parser._subparsers._group_actions[0].choices.values():
                usable = {k: v for k, v in presets.items()
                          if any(a.dest == k for a in action._actions)}
                action.set_defaults(**usable)
        args = parser.parse_args(argv)
        return args.func(args)
    except DickmanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
