"""Command-line front end.

Subcommands
-----------
eval    one lambda(alpha) as JSON
sweep   lambda over an alpha grid to CSV (and optionally SVG)
fit     envelope fit of a sweep's residual against a large-alpha law
verify  shoot a sample of sweep rows through the ODE

Exit codes: 0 ok, 1 usage, 2 quadrature, 3 admissibility, 4 partial sweep,
5 fit outside tolerance, 6 verification failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .asymptotics import THEOREMS, analyze_residual, pure_power_lambda, predict_large_alpha, theorem_model
from .errors import (
    AdmissibilityViolation,
    BifcurveError,
    InsufficientCoverage,
    NonFinite,
    PanelBudgetExceeded,
    QuadratureFailure,
)
from .model import ProblemFamily, ProblemSpec, parse_flat_record
from .quadrature import QuadratureConfig
from .timemap import SPACINGS, AlphaGrid, SweepResult, lambda_of_alpha, read_curve_csv, sweep_curve

EXIT_OK, EXIT_USAGE, EXIT_QUAD, EXIT_ADMISSIBILITY, EXIT_PARTIAL, EXIT_FIT, EXIT_VERIFY = range(7)

# fit tolerances
DECAY_TOL = 0.05
AMPLITUDE_TOL = 0.10
PHASE_TOL = 0.10
REMAINDER_MAX_EXP = -0.8

# built-in values for options that a config file may also set
DEFAULTS = {
    "family": None,
    "n": 1,
    "p": 1.0,
    "k": 2,
    "m": 2,
    "alpha": None,
    "tol": None,
    "rel_tol": 1e-10,
    "abs_tol": 1e-12,
    "max_levels": 12,
    "max_panels": 1_000_000,
    "start": None,
    "stop": None,
    "count": 50,
    "spacing": "linear",
    "subdivisions": 1,
    "out": None,
    "svg": None,
    "json": None,
    "in": None,
    "theorem": None,
    "samples": 10,
    "threads": 1,
}
_CASTS = {
    "n": int,
    "k": int,
    "m": int,
    "p": float,
    "alpha": float,
    "tol": float,
    "rel_tol": float,
    "abs_tol": float,
    "max_levels": int,
    "max_panels": int,
    "start": float,
    "stop": float,
    "count": int,
    "subdivisions": int,
    "samples": int,
    "threads": int,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_problem(p):
    g = p.add_argument_group("problem")
    g.add_argument("--family", help="osc-diffusion | osc-reaction | osc-both | pure-power")
    g.add_argument("--n", type=int, help="power 2n in D = p u^{2n} + sin u")
    g.add_argument("--p", type=float, help="coefficient p in D = p u^{2n} + sin u")
    g.add_argument("--k", type=int, help="D = u^k")
    g.add_argument("--m", type=int, help="g = u^{2m-k-1} (+ sin u)")


def _add_quad(p):
    g = p.add_argument_group("quadrature")
    g.add_argument("--rel-tol", dest="rel_tol", type=float)
    g.add_argument("--abs-tol", dest="abs_tol", type=float)
    g.add_argument("--max-levels", dest="max_levels", type=int)
    g.add_argument("--max-panels", dest="max_panels", type=int)


def _add_global(p, default=None):
    p.add_argument("--config", type=Path, default=default, help="flat 'key = value' file; flags override it")
    p.add_argument("--threads", type=int, default=default, help="worker processes for sweeps (0 = one per CPU)")


def build_parser():
    parser = _Parser(prog="bifcurve", description="Bifurcation curves lambda(alpha) via the time map.")
    _add_global(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="lambda at one alpha, as JSON")
    _add_global(p, argparse.SUPPRESS)
    _add_problem(p)
    _add_quad(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--tol", type=float, help="shorthand for --rel-tol")

    p = sub.add_parser("sweep", help="lambda over an alpha grid, as CSV")
    _add_global(p, argparse.SUPPRESS)
    _add_problem(p)
    _add_quad(p)
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--spacing", choices=SPACINGS)
    p.add_argument("--subdivisions", type=int, help="phase-locked points per pi")
    p.add_argument("--tol", type=float, help="shorthand for --rel-tol")
    p.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    p.add_argument("--svg", type=Path, help="also plot lambda and the leading term")

    p = sub.add_parser("fit", help="envelope fit of a sweep residual")
    _add_global(p, argparse.SUPPRESS)
    _add_problem(p)
    p.add_argument("--in", dest="in", type=Path)
    p.add_argument("--theorem", choices=THEOREMS)
    p.add_argument("--json", type=Path, help="write the fit summary here")
    p.add_argument("--svg", type=Path, help="plot residual and predicted envelope")

    p = sub.add_parser("verify", help="shoot sweep rows through the ODE")
    _add_global(p, argparse.SUPPRESS)
    _add_problem(p)
    p.add_argument("--in", dest="in", type=Path)
    p.add_argument("--tol", type=float)
    p.add_argument("--samples", type=int)
    return parser


def _resolve(args):
    """Merge built-in defaults < config file < flags into a plain dict."""
    ns = vars(args)
    allowed = {k for k in ns if k in DEFAULTS}
    conf = {}
    if args.config is not None:
        try:
            raw = parse_flat_record(args.config.read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        except ValueError as exc:
            raise UsageError(f"config: {exc}") from None
        for key, value in raw.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"config: unknown key {key!r}")
            if key not in allowed:
                continue  # meaningful for another subcommand
            try:
                conf[key] = _CASTS.get(key, str)(value)
            except ValueError:
                raise UsageError(f"config: bad value {value!r} for {key!r}") from None
    out = {}
    for key in allowed:
        flag = ns.get(key)
        out[key] = flag if flag is not None else conf.get(key, DEFAULTS[key])
    return out


def _spec(opts, default_family=None):
    family = opts["family"] or default_family
    if family is None:
        raise UsageError("--family is required")
    try:
        return ProblemSpec(family, n=opts["n"], p=opts["p"], k=opts["k"], m=opts["m"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _quad(opts):
    rel = opts["tol"] if opts.get("tol") is not None else opts["rel_tol"]
    try:
        return QuadratureConfig(
            rel_tol=rel, abs_tol=opts["abs_tol"], max_levels=opts["max_levels"], max_panels=opts["max_panels"]
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _point_json(spec, pt):
    rec = {
        "problem": spec.to_record(),
        "alpha": pt.alpha,
        "lambda": pt.lam,
        "err_estimate": pt.err_estimate,
        "nodes": pt.nodes_used,
        "converged": pt.converged,
    }
    return json.dumps(rec, indent=2) + "\n"


def cmd_eval(opts):
    spec = _spec(opts)
    if opts["alpha"] is None or not opts["alpha"] > 0:
        raise UsageError("--alpha must be a positive number")
    pt = lambda_of_alpha(spec, opts["alpha"], _quad(opts), strict=False)
    sys.stdout.write(_point_json(spec, pt))
    return EXIT_OK if pt.converged else EXIT_QUAD


def _reference_curve(spec, alphas):
    if spec.family is ProblemFamily.PURE_POWER:
        return pure_power_lambda(spec.k, spec.m, alphas), "exact pure-power law"
    *_, model = predict_large_alpha(spec, float(alphas[0]))
    return model.leading(alphas), "leading term"


def cmd_sweep(opts):
    spec = _spec(opts)
    if opts["start"] is None or opts["stop"] is None:
        raise UsageError("--start and --stop are required")
    try:
        grid = AlphaGrid(opts["start"], opts["stop"], opts["count"], opts["spacing"], opts["subdivisions"])
        grid.values()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = sweep_curve(spec, grid, _quad(opts), workers=opts["threads"], strict=False)
    text = result.to_csv()
    if opts["out"] is None:
        sys.stdout.write(text)
    else:
        _write(opts["out"], text)
    if opts["svg"] is not None:
        from .plotting import curve_svg

        ref, label = _reference_curve(spec, result.alphas)
        _write(opts["svg"], curve_svg(result.alphas, result.lambdas, ref, title=spec.label, reference_label=label))
    if not result.all_converged:
        bad = [p.alpha for p in result.points if not p.converged]
        print(f"bifcurve: {len(bad)} point(s) did not converge, first at alpha={bad[0]:.17g}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _read_curve(path):
    if path is None:
        raise UsageError("--in is required")
    try:
        return read_curve_csv(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


_THEOREM_FAMILY = {"1.1": "osc-reaction", "1.2i": "osc-diffusion", "1.3i": "osc-both"}


def fit_verdict(model, fit):
    """(passed, message) for an envelope fit under the acceptance tolerances."""
    if not model.has_second:
        if model.formula == "pure power":
            ok = fit.sign_changes == 0
            return ok, "no oscillatory term expected; residual at rounding level" if ok else "unexpected oscillation"
        ok = fit.decay_exp <= REMAINDER_MAX_EXP
        msg = f"second term below detection, remainder exponent {fit.decay_exp:.3f}"
        return ok, msg + (f" <= {REMAINDER_MAX_EXP}" if ok else f" > {REMAINDER_MAX_EXP}")
    target_amp = abs(model.second_coeff)
    checks = {
        "decay_exp": abs(fit.decay_exp - model.second_exp) <= DECAY_TOL,
        "amplitude": abs(fit.amplitude / target_amp - 1.0) <= AMPLITUDE_TOL,
    }
    if model.second_exp > 0:
        # growing oscillation: the phase and the crossings are part of the law
        checks["phase_offset"] = abs(fit.phase_offset) <= PHASE_TOL
        checks["sign_changes"] = fit.sign_changes >= len(fit.extrema_alpha) - 2
    failed = [k for k, ok in checks.items() if not ok]
    if failed:
        return False, "outside tolerance: " + ", ".join(failed)
    return True, "within tolerance"


def cmd_fit(opts):
    if opts["theorem"] is None:
        raise UsageError("--theorem is required")
    points = _read_curve(opts["in"])
    spec = _spec(opts, _THEOREM_FAMILY[opts["theorem"]])
    try:
        model = theorem_model(opts["theorem"], spec)
    except BifcurveError as exc:
        raise UsageError(str(exc)) from None
    sweep = SweepResult(spec, tuple(points))
    try:
        fit = analyze_residual(sweep, model)
    except InsufficientCoverage as exc:
        print(f"bifcurve: {exc}", file=sys.stderr)
        return EXIT_FIT
    ok, message = fit_verdict(model, fit)
    print(f"amplitude: {fit.amplitude:.6g}")
    print(f"decay_exp: {fit.decay_exp:.6g}")
    print(f"sign_changes: {fit.sign_changes}")
    print(f"verdict: {'pass' if ok else 'fail'} ({message})")
    if opts["json"] is not None:
        rec = fit.to_dict() | {"theorem": opts["theorem"], "passed": ok, "message": message}
        _write(opts["json"], json.dumps(rec, indent=2) + "\n")
    if opts["svg"] is not None:
        from .plotting import residual_svg

        a = sweep.alphas
        env = abs(model.second_coeff) * a**model.second_exp if model.has_second else None
        _write(opts["svg"], residual_svg(a, sweep.lambdas - model.leading(a), env, title=spec.label))
    return EXIT_OK if ok else EXIT_FIT


def cmd_verify(opts):
    from .oracle import shoot_converged

    points = _read_curve(opts["in"])
    spec = _spec(opts)
    tol = 1e-6 if opts["tol"] is None else opts["tol"]
    if not tol > 0:
        raise UsageError("--tol must be positive")
    if opts["samples"] < 1:
        raise UsageError("--samples must be >= 1")
    if not points:
        raise UsageError("curve file has no rows")
    idx = sorted(set(np.linspace(0, len(points) - 1, min(opts["samples"], len(points))).round().astype(int)))
    passed, worst = 0, 0.0
    for i in idx:
        pt = points[i]
        try:
            res = shoot_converged(spec, pt.alpha, pt.lam, tol)
            r = abs(res.boundary_residual)
            ok = r <= tol and res.energy_drift <= 10 * tol
        except NonFinite:
            r, ok = math.inf, False
        worst = max(worst, r)
        passed += ok
    summary = {"checked": len(idx), "passed": passed, "worst_residual": worst}
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK if passed == len(idx) else EXIT_VERIFY


def _write(path, text):
    try:
        Path(path).write_text(text, newline="\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


_COMMANDS = {"eval": cmd_eval, "sweep": cmd_sweep, "fit": cmd_fit, "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _resolve(args)
        return _COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"bifcurve: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AdmissibilityViolation as exc:
        print(f"bifcurve: admissibility: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except (QuadratureFailure, PanelBudgetExceeded, NonFinite) as exc:
        print(f"bifcurve: quadrature: {exc}", file=sys.stderr)
        return EXIT_QUAD


if __name__ == "__main__":
    sys.exit(main())
