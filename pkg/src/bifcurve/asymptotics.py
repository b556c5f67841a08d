"""Asymptotic constants, predictor formulas and residual-envelope fits.

Large alpha, every supported family follows

    lambda ~ c0 alpha^e0 + c1 alpha^e1 sin(alpha - pi/4) + remainder

and the second term is what separates the families: e1 = +1/2 when sin u
sits in g, e1 = -1/2 (or nothing at all) when it sits in D. The envelope
fit below measures e1 from the extrema of lambda_num - c0 alpha^e0.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InsufficientCoverage, UnsupportedFamily
from .model import ProblemFamily
from .quadrature import QuadratureConfig, integrate_endpoint_singular


def coeff_A(k, m):
    """A_{k,m} = int_0^1 s^k / sqrt(1 - s^{2m}) ds = B((k+1)/(2m), 1/2) / (2m)."""
    if k < 0 or m < 1:
        raise ValueError("need k >= 0 and m >= 1")
    a = (k + 1) / (2 * m)
    log_beta = math.lgamma(a) + math.lgamma(0.5) - math.lgamma(a + 0.5)
    return math.exp(log_beta) / (2 * m)


def _c1_integrand(s, c):
    # 1 - s^3 = c (1 + s + s^2); (1 - s^4)/(1 - s^3) factored so s -> 1 gives 4/3
    q = 1.0 + s + s * s
    ratio = (1.0 + s) * (1.0 + s * s) / q
    return (s * s - 0.375 * s * ratio) / np.sqrt(c * q)


@functools.cache
def coeff_C0C1():
    """(C_0, C_1) of the small-alpha expansions.

    C_0 = B(2/3, 1/2) / 3 in closed form; C_1 by tanh-sinh.
    """
    c0 = math.exp(math.lgamma(2 / 3) + math.lgamma(0.5) - math.lgamma(2 / 3 + 0.5)) / 3
    res = integrate_endpoint_singular(
        _c1_integrand, QuadratureConfig(rel_tol=1e-15, abs_tol=1e-300, max_levels=15), complement=True
    )
    return c0, res.value


@dataclass(frozen=True)
class AsymptoticModel:
    """leading_coeff alpha^leading_exp
    + second_coeff alpha^second_exp sin(alpha + phase_shift)
    + O(alpha^remainder_exp)."""

    leading_coeff: float
    leading_exp: float
    second_coeff: float
    second_exp: float
    phase_shift: float = -math.pi / 4
    remainder_exp: float = 0.0
    formula: str = ""

    def leading(self, alpha):
        return self.leading_coeff * np.asarray(alpha, dtype=float) ** self.leading_exp

    def second(self, alpha):
        a = np.asarray(alpha, dtype=float)
        return self.second_coeff * a**self.second_exp * np.sin(a + self.phase_shift)

    def with_second(self, alpha):
        return self.leading(alpha) + self.second(alpha)

    @property
    def has_second(self):
        return self.second_coeff != 0.0


def model_power_reaction(k, m, formula="power reaction"):
    """D = u^k, g = u^{2m-k-1} + sin u."""
    A = coeff_A(k, m)
    e0 = 2 * k + 2 - 2 * m
    e1 = e0 + k + 0.5 - 2 * m
    return AsymptoticModel(
        leading_coeff=4 * m * A * A,
        leading_exp=e0,
        second_coeff=-8 * m * A * math.sqrt(math.pi / (2 * m)),
        second_exp=e1,
        remainder_exp=e1,  # little-o: strictly below this
        formula=formula,
    )


def model_osc_diffusion(n, p):
    """D = p u^{2n} + sin u, g = u."""
    A = coeff_A(2 * n, n + 1)
    pref = 4 * (n + 1) / p
    return AsymptoticModel(
        leading_coeff=pref * p * p * A * A,
        leading_exp=2 * n,
        second_coeff=pref * 2 * A * (p - 1) * math.sqrt(math.pi / (2 * (n + 1))),
        second_exp=-0.5,
        remainder_exp=-1.0,
        formula="diffusion, p = 1" if p == 1 else "diffusion, p != 1",
    )


THEOREMS = ("1.1", "1.2i", "1.3i")


def theorem_model(theorem, spec):
    """Large-alpha model selected by its CLI label for ``spec``.

    "1.1" is the power/reaction law and also accepts PURE_POWER specs
    (whose residual should then carry no oscillation).
    """
    f = spec.family
    if theorem == "1.1" and f is ProblemFamily.PURE_POWER:
        exact = model_power_reaction(spec.k, spec.m)
        return AsymptoticModel(exact.leading_coeff, exact.leading_exp, 0.0, 0.0, formula="pure power")
    if theorem == "1.1" and f is ProblemFamily.OSC_REACTION:
        return model_power_reaction(spec.k, spec.m)
    if theorem == "1.2i" and f is ProblemFamily.OSC_DIFFUSION:
        return model_osc_diffusion(spec.n, spec.p)
    if theorem == "1.3i" and f is ProblemFamily.OSC_BOTH:
        return model_power_reaction(2, 2, formula="oscillating both")
    raise UnsupportedFamily(f"law {theorem} does not cover {spec.label}")


def predict_large_alpha(spec, alpha):
    """(leading, leading + second, model) for the family's large-alpha law."""
    f = spec.family
    if f is ProblemFamily.OSC_REACTION:
        model = model_power_reaction(spec.k, spec.m)
    elif f is ProblemFamily.OSC_BOTH:
        model = model_power_reaction(2, 2, formula="oscillating both")
    elif f is ProblemFamily.OSC_DIFFUSION:
        model = model_osc_diffusion(spec.n, spec.p)
    else:
        raise UnsupportedFamily("pure-power curves follow the exact law 4m A^2 alpha^(2k+2-2m); no asymptotics needed")
    return float(model.leading(alpha)), float(model.with_second(alpha)), model


def pure_power_lambda(k, m, alpha):
    """Exact lambda for D = u^k, g = u^{2m-k-1}."""
    return 4 * m * coeff_A(k, m) ** 2 * alpha ** (2 * k + 2 - 2 * m)


def predict_small_alpha(spec, alpha):
    """Two-term small-alpha value of lambda (OSC_DIFFUSION with n = 1, or OSC_BOTH)."""
    if not 0 < alpha <= 0.5:
        raise ValueError("small-alpha prediction needs 0 < alpha <= 0.5")
    c0, c1 = coeff_C0C1()
    if spec.family is ProblemFamily.OSC_DIFFUSION and spec.n == 1:
        return 6 * alpha * (c0 * c0 + 2 * spec.p * c0 * c1 * alpha)
    if spec.family is ProblemFamily.OSC_BOTH:
        return 3 * alpha * (c0 * c0 + 2 * c0 * c1 * alpha)
    raise UnsupportedFamily(f"no small-alpha expansion for {spec.label}")


# ---------------------------------------------------------------------------
# envelope fitting


@dataclass(frozen=True)
class EnvelopeFit:
    amplitude: float
    decay_exp: float
    phase_offset: float
    sign_changes: int
    rms_misfit: float
    extrema_alpha: tuple = field(default=(), repr=False)
    extrema_value: tuple = field(default=(), repr=False)

    def to_dict(self):
        d = asdict(self)
        del d["extrema_alpha"], d["extrema_value"]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"


def locate_extrema(alpha, resid, phase_shift=-math.pi / 4):
    """One extremum of ``resid`` per half-period window of sin(alpha + phase_shift).

    Windows are centred on the predicted extrema with half-width pi/4. The
    largest |resid| sample in a window is refined by fitting
    a cos(x) + b sin(x) through it and its two grid neighbours (the residual
    oscillates at unit frequency), provided both neighbours are within
    pi/2; otherwise the sample itself is used.
    """
    alpha = np.asarray(alpha, dtype=float)
    resid = np.asarray(resid, dtype=float)
    first = math.pi / 2 - phase_shift
    j0 = math.ceil((alpha[0] - first) / math.pi)
    j1 = math.floor((alpha[-1] - first) / math.pi)
    ext_a, ext_r = [], []
    for j in range(j0, j1 + 1):
        centre = first + j * math.pi
        idx = np.flatnonzero(np.abs(alpha - centre) <= math.pi / 4 + 1e-12)
        if idx.size == 0:
            continue
        i = int(idx[np.argmax(np.abs(resid[idx]))])
        a_star, r_star = alpha[i], resid[i]
        if 0 < i < alpha.size - 1 and alpha[i + 1] - alpha[i - 1] <= math.pi:
            x = alpha[i - 1 : i + 2] - alpha[i]
            (a, b), *_ = np.linalg.lstsq(np.column_stack([np.cos(x), np.sin(x)]), resid[i - 1 : i + 2], rcond=None)
            if a != 0:
                t = math.atan(b / a)
                if abs(t) <= math.pi / 4:
                    a_star, r_star = alpha[i] + t, a * math.cos(t) + b * math.sin(t)
        ext_a.append(float(a_star))
        ext_r.append(float(r_star))
    return np.array(ext_a), np.array(ext_r)


def count_sign_changes(values, floor=0.0):
    """Sign changes of ``values``, ignoring entries with |value| <= floor."""
    v = np.asarray(values, dtype=float)
    s = np.where(np.abs(v) > floor, np.sign(v), 0.0)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def analyze_residual(sweep, model, min_extrema=10, noise_rel=1e-9):
    """Fit the envelope of R = lambda_num - leading term.

    decay_exp is the least-squares slope of log|R_j| against log alpha_j
    over the located extrema. amplitude is the envelope at the geometric
    mean alpha divided by alpha^e, with e the model's second-term exponent
    (e = 0 when the model has no second term), so it is directly
    comparable with |second_coeff|. phase_offset is phi in
    R ~ sign(second_coeff) |c| alpha^e sin(alpha + phase_shift + phi).
    Residuals within noise_rel of the leading term count as zero when
    sign changes are tallied.
    """
    alpha = np.asarray(sweep.alphas if hasattr(sweep, "alphas") else sweep[0], dtype=float)
    lam = np.asarray(sweep.lambdas if hasattr(sweep, "lambdas") else sweep[1], dtype=float)
    order = np.argsort(alpha)
    alpha, lam = alpha[order], lam[order]
    lead = model.leading(alpha)
    resid = lam - lead
    ext_a, ext_r = locate_extrema(alpha, resid, model.phase_shift)
    if ext_a.size < min_extrema:
        raise InsufficientCoverage(f"found {ext_a.size} extrema, need at least {min_extrema}")
    tiny = np.finfo(float).tiny
    la = np.log(ext_a)
    lr = np.log(np.maximum(np.abs(ext_r), tiny))
    slope, intercept = np.polyfit(la, lr, 1)
    misfit = lr - (slope * la + intercept)
    e_ref = model.second_exp if model.has_second else 0.0
    amplitude = math.exp(lr.mean() - e_ref * la.mean())

    x = alpha + model.phase_shift
    design = np.column_stack([np.sin(x), np.cos(x), np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, resid / alpha**e_ref, rcond=1e-10)
    sgn = -1.0 if model.second_coeff < 0 else 1.0
    phase = math.atan2(sgn * coef[1], sgn * coef[0])

    return EnvelopeFit(
        amplitude=float(amplitude),
        decay_exp=float(slope),
        phase_offset=float(phase),
        sign_changes=count_sign_changes(resid, noise_rel * np.abs(lead)),
        rms_misfit=float(np.sqrt(np.mean(misfit**2))),
        extrema_alpha=tuple(ext_a.tolist()),
        extrema_value=tuple(ext_r.tolist()),
    )
