"""Stationary-phase lemma and the oscillatory integrals behind the large-alpha laws.

The lemma: for smooth f on [0, 1] and w(r) = cos(pi r / 2),

    int_0^1 f(r) cos(mu w(r)) dr = sqrt(2 / (mu pi)) f(0) cos(mu - pi/4) + O(1/mu)

and likewise with sin. The diagnostics J2, J3, J4 (OscDiffusion) and L4
(OscBoth) are the pieces of the time map that carry the alpha^{-1/2}
oscillation; ``reassemble_time_map`` adds them back up with the smooth J1 and
the higher-order J5 to rebuild sqrt(lambda / 2).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .asymptotics import coeff_A
from .errors import InsufficientRange
from .quadrature import QuadratureConfig, integrate_adaptive

KINDS = ("cos", "sin")


def _trig(kind):
    if kind == "cos":
        return np.cos
    if kind == "sin":
        return np.sin
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


def lemma21_leading(f0, mu, kind):
    """sqrt(2 / (mu pi)) f0 trig(mu - pi/4)."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    return math.sqrt(2.0 / (mu * math.pi)) * f0 * float(_trig(kind)(mu - math.pi / 4))


def lemma21_exact(f, mu, kind, cfg=None):
    """int_0^1 f(r) trig(mu cos(pi r / 2)) dr.

    Panels break where mu cos(pi r / 2) crosses a multiple of pi/4, so each
    panel sees at most a quarter period of the phase.
    """
    trig = _trig(kind)
    if mu < 0:
        raise ValueError("mu must be non-negative")
    cfg = cfg or QuadratureConfig()
    j = np.arange(1, int(4 * mu / math.pi) + 1)
    pts = (2.0 / math.pi) * np.arccos(np.minimum(j * math.pi / (4 * mu), 1.0)) if mu > 0 else np.array([])
    pts = pts[(pts > 0) & (pts < 1)]

    def integrand(r):
        return f(r) * trig(mu * np.cos(0.5 * math.pi * r))

    return integrate_adaptive(integrand, 0.0, 1.0, cfg, points=np.sort(pts)).value


def half_period_profile(n):
    """f(r) = 1 / sqrt(1 + cos^2 + ... + cos^{2n}) of pi r / 2; f(0) = 1/sqrt(n + 1)."""

    def f(r):
        c2 = np.cos(0.5 * math.pi * np.asarray(r, dtype=float)) ** 2
        return 1.0 / np.sqrt(sum(c2**j for j in range(n + 1)))

    return f


# six doublings, e.g. 50 ... 3200
_MIN_SPAN = 64


@dataclass(frozen=True)
class RateScan:
    mu_values: tuple
    errors: tuple
    fitted_exponent: float

    def to_csv(self):
        buf = io.StringIO()
        buf.write("mu,error\n")
        for mu, e in zip(self.mu_values, self.errors):
            buf.write(f"{mu:.16e},{e:.16e}\n")
        return buf.getvalue()

    def to_json(self):
        return json.dumps(asdict(self), indent=2) + "\n"


def lemma21_rate_scan(f, mu_list, kind, cfg=None):
    """Fit log|exact - leading| against log mu; the lemma predicts slope -1."""
    mus = [float(m) for m in mu_list]
    if len(mus) < 5 or any(b <= a for a, b in zip(mus, mus[1:])) or mus[0] <= 0 or mus[-1] / mus[0] < _MIN_SPAN:
        raise InsufficientRange(f"need >= 5 increasing mu values with max/min >= {_MIN_SPAN}")
    f0 = float(np.asarray(f(np.array([0.0])), dtype=float)[0])
    errs = [abs(lemma21_exact(f, mu, kind, cfg) - lemma21_leading(f0, mu, kind)) for mu in mus]
    tiny = np.finfo(float).tiny
    slope, _ = np.polyfit(np.log(mus), np.log(np.maximum(errs, tiny)), 1)
    return RateScan(tuple(mus), tuple(errs), float(slope))


# ---------------------------------------------------------------------------
# time-map diagnostics
#
# All integrals below have the form int_0^1 h(s) (1 - s)^{-1/2} ds with h
# smooth. With s = cos c (c = pi/2 - theta, s = sin theta) this becomes
# int_0^{pi/2} h(cos c) sqrt(2) cos(c/2) dc, which is bounded; 1 - s is
# formed as 2 sin^2(c/2) so no digits are lost near s = 1.


def _sin_half_over(alpha, eps):
    # sin(alpha eps / 2) / eps, finite at eps = 0
    return 0.5 * alpha * np.sinc(alpha * eps / (2.0 * math.pi))


def _c_integral(h, alpha, cfg):
    def integrand(c):
        s = np.cos(c)
        eps = 2.0 * np.sin(0.5 * c) ** 2
        return h(s, eps) * math.sqrt(2.0) * np.cos(0.5 * c)

    j = np.arange(1, int(4 * alpha / math.pi) + 1)
    pts = np.arccos(np.minimum(j * math.pi / (4 * alpha), 1.0))
    pts = np.sort(pts[(pts > 0) & (pts < 0.5 * math.pi)])
    return integrate_adaptive(integrand, 0.0, 0.5 * math.pi, cfg, points=pts).value


def _geom(s, n):
    # (1 - s^{2n+2}) / (1 - s)
    return sum(s**j for j in range(2 * n + 2))


def _cos_diff(alpha, s, eps):
    # (cos alpha - s cos(alpha s)) / (1 - s)
    return np.cos(alpha * s) - 2.0 * np.sin(0.5 * alpha * (1 + s)) * _sin_half_over(alpha, eps)


def _sin_diff(alpha, s, eps):
    # (sin alpha - sin(alpha s)) / (1 - s)
    return 2.0 * np.cos(0.5 * alpha * (1 + s)) * _sin_half_over(alpha, eps)


def _j2(n, alpha, cfg):
    return _c_integral(lambda s, e: np.sin(alpha * s) / np.sqrt(_geom(s, n)), alpha, cfg)


def _j3(n, alpha, cfg):
    v = _c_integral(lambda s, e: s ** (2 * n) * _cos_diff(alpha, s, e) / _geom(s, n) ** 1.5, alpha, cfg)
    return (n + 1) / alpha * v


def _j4(n, alpha, cfg):
    v = _c_integral(lambda s, e: s ** (2 * n) * _sin_diff(alpha, s, e) / _geom(s, n) ** 1.5, alpha, cfg)
    return -(n + 1) / alpha**2 * v


def _j5(n, p, alpha, cfg):
    def h(s, e):
        m = alpha * _cos_diff(alpha, s, e) - _sin_diff(alpha, s, e)
        return np.sin(alpha * s) * m / _geom(s, n) ** 1.5

    return (n + 1) / (p * alpha ** (2 * n + 2)) * _c_integral(h, alpha, cfg)


def _l4(alpha, cfg):
    def h(s, e):
        # (cos alpha - s^2 cos(alpha s)) / (1 - s)
        num = (1 + s) * np.cos(alpha * s) - 2.0 * np.sin(0.5 * alpha * (1 + s)) * _sin_half_over(alpha, e)
        return s * s * num / ((1 + s) * (1 + s * s)) ** 1.5

    return 4.0 / alpha * _c_integral(h, alpha, cfg)


def proof_diagnostics(n, p, alpha, cfg=None):
    """{J2, J3, J4, L4} at ``alpha`` for OscDiffusion(n, p) (L4 belongs to OscBoth).

    J3 and J4 do not depend on p: the p in the diffusion's power part
    cancels against the p of the potential.
    """
    if alpha < 20:
        raise ValueError("diagnostics need alpha >= 20")
    if n < 1 or not p > 0:
        raise ValueError("need n >= 1 and p > 0")
    cfg = cfg or QuadratureConfig()
    return {"J2": _j2(n, alpha, cfg), "J3": _j3(n, alpha, cfg), "J4": _j4(n, alpha, cfg), "L4": _l4(alpha, cfg)}


def diagnostic_leading(name, n, alpha):
    """Stationary-phase prediction for a diagnostic."""
    amp = math.sqrt(math.pi / (2 * (n + 1) * alpha))
    x = alpha - math.pi / 4
    if name == "J2":
        return amp * math.sin(x)
    if name == "J3":
        return -amp * (math.sin(x) - math.cos(x) / alpha)
    if name == "J4":
        return -amp * math.cos(x) / alpha
    if name == "L4":
        return -math.sqrt(math.pi / alpha) * math.sin(x)
    raise ValueError(f"unknown diagnostic {name!r}")


def reassemble_time_map(n, p, alpha, cfg=None):
    """sqrt(lambda / 2) for OscDiffusion(n, p) from the first-order expansion

        sqrt((2n+2)/p) alpha^{-n} (J1 + J2 + J3 + J4 + J5),

    J1 = p A_{2n,n+1} alpha^{2n} in closed form, the rest by quadrature.
    Dropped terms are relatively O(alpha^{-4}) for n = 1.
    """
    cfg = cfg or QuadratureConfig()
    parts = {
        "J1": p * coeff_A(2 * n, n + 1) * alpha ** (2 * n),
        "J2": _j2(n, alpha, cfg),
        "J3": _j3(n, alpha, cfg),
        "J4": _j4(n, alpha, cfg),
        "J5": _j5(n, p, alpha, cfg),
    }
    total = math.fsum(parts.values())
    parts["sqrt_half_lambda"] = math.sqrt((2 * n + 2) / p) * alpha ** (-n) * total
    return parts
