"""Quadrature kernels: tanh-sinh for endpoint singularities, adaptive
Gauss-Kronrod for smooth panels, and a half-period splitter for integrands
oscillating like sin(alpha s) on (0, 1).

All integrands are vectorised: they receive a 1-d float array of nodes.
Kernels that accept ``complement=True`` call ``f(s, c)`` where ``c`` is the
distance from ``s`` to the right endpoint, computed without the rounding
that ``1 - s`` suffers next to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import NonFinite, PanelBudgetExceeded


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_levels: int = 12
    max_panels: int = 1_000_000
    osc_panel_fraction: float = 4

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 1 <= self.max_levels <= 15:
            raise ValueError("max_levels must lie in [1, 15]")
        if self.max_panels < 1 or self.osc_panel_fraction < 1:
            raise ValueError("max_panels and osc_panel_fraction must be >= 1")

    def tolerance(self, value):
        return max(self.rel_tol * abs(value), self.abs_tol)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    err_estimate: float
    nodes_used: int
    converged: bool

    def __add__(self, other):
        return combine([self, other])

    def scaled(self, c):
        return QuadratureResult(c * self.value, abs(c) * self.err_estimate, self.nodes_used, self.converged)


def combine(results, cfg=None):
    """Sum panel results with error-free (fsum) accumulation."""
    results = list(results)
    value = math.fsum(r.value for r in results)
    err = math.fsum(r.err_estimate for r in results)
    converged = all(r.converged for r in results)
    if cfg is not None:
        converged = converged and err <= cfg.tolerance(value)
    return QuadratureResult(value, err, sum(r.nodes_used for r in results), converged)


_DEFAULT = QuadratureConfig()


def _check_finite(vals, where):
    if not np.all(np.isfinite(vals)):
        raise NonFinite(f"integrand returned a non-finite value {where}")


# ---------------------------------------------------------------------------
# tanh-sinh

# |t| <= T_MAX puts the outermost nodes ~1e-61 from the endpoints
_T_MAX = 4.5


def _ts_nodes(h, odd_only):
    n = int(math.ceil(_T_MAX / h))
    k = np.arange(-n, n + 1)
    if odd_only:
        k = k[k % 2 != 0]
    t = k * h
    u = 0.5 * math.pi * np.sinh(t)
    x = expit(2.0 * u)  # node in (0, 1)
    xc = expit(-2.0 * u)  # 1 - x, exact in the tail
    w = h * math.pi * np.cosh(t) * x * xc
    return x, xc, w


def integrate_endpoint_singular(f, cfg=None, *, a=0.0, b=1.0, complement=False):
    """Double-exponential (tanh-sinh) quadrature on (a, b).

    Handles algebraic endpoint singularities of any exponent > -1 without
    being told the exponent. ``f`` is never evaluated at a or b. Returns
    ``converged=False`` rather than raising when ``max_levels`` runs out.
    """
    cfg = cfg or _DEFAULT
    width = b - a

    def evaluate(x, xc, w):
        s = a + width * x
        c = width * xc
        keep = (w > 0) & (c > 0) & (s > a) & (s < b) if not complement else (w > 0) & (c > 0) & (x > 0)
        s, c, w = s[keep], c[keep], w[keep]
        vals = np.asarray(f(s, c) if complement else f(s), dtype=float)
        _check_finite(vals, "inside the tanh-sinh interval")
        return math.fsum(w * vals) * width, int(s.size)

    h = 1.0
    prev, nodes = evaluate(*_ts_nodes(h, odd_only=False))
    estimate = prev
    err = math.inf
    for _level in range(1, cfg.max_levels + 1):
        h *= 0.5
        extra, used = evaluate(*_ts_nodes(h, odd_only=True))
        nodes += used
        estimate = 0.5 * prev + extra
        err = abs(estimate - prev)
        if _level >= 3 and err <= cfg.tolerance(estimate):
            return QuadratureResult(estimate, err, nodes, True)
        prev = estimate
    return QuadratureResult(estimate, err, nodes, False)


# ---------------------------------------------------------------------------
# Gauss-Kronrod 7/15

_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)
_X15 = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_W15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W7 = np.zeros(15)
_W7[1:7:2] = _WG[:3]
_W7[7] = _WG[3]
_W7[9:15:2] = _WG[2::-1]


def _gk15(f, lo, hi, complement, right):
    """Kronrod value, error estimate and roundoff floor on each panel."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _X15
    if complement:
        c = (right - mid)[:, None] - half[:, None] * _X15
        vals = np.asarray(f(x.ravel(), c.ravel()), dtype=float).reshape(x.shape)
    else:
        vals = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    _check_finite(vals, "on an adaptive panel")
    k = half * (vals @ _W15)
    g = half * (vals @ _W7)
    floor = _ROUNDOFF * np.abs(half) * (np.abs(vals) @ _W15)
    return k, np.maximum(np.abs(k - g), floor), floor


_ROUNDOFF = 50 * np.finfo(float).eps


def integrate_adaptive(f, a, b, cfg=None, *, points=None, complement=False):
    """Globally adaptive Gauss-Kronrod (7/15) quadrature on [a, b].

    ``points`` are optional interior breakpoints that seed the panel list.
    Panels whose error exceeds their length-proportional share of the
    tolerance are bisected until the summed estimate meets
    ``max(rel_tol |I|, abs_tol)``. Raises :class:`PanelBudgetExceeded` when
    ``max_panels`` panels have been processed without convergence.
    """
    cfg = cfg or _DEFAULT
    if a == b:
        return QuadratureResult(0.0, 0.0, 0, True)
    edges = np.array([a, *(points if points is not None else ()), b], dtype=float)
    edges = np.unique(edges) if a < b else edges
    lo, hi = edges[:-1], edges[1:]
    span = abs(b - a)

    done_vals, done_errs, done_floor = [], [], []
    nodes = 0
    processed = 0
    while True:
        k, e, floor = _gk15(f, lo, hi, complement, b)
        nodes += 15 * lo.size
        processed += lo.size
        total = math.fsum(done_vals) + math.fsum(k)
        err = math.fsum(done_errs) + math.fsum(e)
        tol = cfg.tolerance(total)
        if err <= tol:
            return QuadratureResult(total, err, nodes, True)
        share = tol * np.abs(hi - lo) / span
        refinable = e > floor
        floor_total = math.fsum(done_floor) + math.fsum(floor)
        if not np.any(refinable) or (floor_total > tol and err <= 2.0 * floor_total):
            # the estimate is down to roundoff, which alone exceeds the tolerance
            return QuadratureResult(total, err, nodes, False)
        bad = refinable & (e > 0.5 * share)
        if not np.any(bad):
            bad = refinable & (e >= e[refinable].max())
        # an unsplittable panel means we are at the resolution of doubles
        mid = 0.5 * (lo + hi)
        if np.any((mid[bad] == lo[bad]) | (mid[bad] == hi[bad])) or processed + 2 * int(bad.sum()) > cfg.max_panels:
            raise PanelBudgetExceeded(
                f"adaptive quadrature on [{a}, {b}] stopped at err {err:.3g} > tol {tol:.3g} after {processed} panels"
            )
        done_vals.extend(k[~bad].tolist())
        done_errs.extend(e[~bad].tolist())
        done_floor.extend(floor[~bad].tolist())
        lo = np.concatenate([lo[bad], mid[bad]])
        hi = np.concatenate([mid[bad], hi[bad]])
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]


# ---------------------------------------------------------------------------
# oscillatory + singular


def integrate_oscillatory_singular(f, freq, cfg=None, *, complement=False):
    """Integrate f on (0, 1) where f oscillates like sin(freq s) and may
    carry an algebraic singularity at s = 1.

    [0, 1 - delta] is cut at the zeros j pi / freq (each half-period further
    split into ``osc_panel_fraction`` panels) and handed to the adaptive
    kernel; the last piece (1 - delta, 1), delta = min(pi / freq, 1e-2), goes
    to tanh-sinh. freq = 0 is plain tanh-sinh on (0, 1).
    """
    cfg = cfg or _DEFAULT
    if freq < 0:
        raise ValueError("freq must be non-negative")
    if freq == 0:
        return integrate_endpoint_singular(f, cfg, complement=complement)
    delta = min(math.pi / freq, 1e-2)
    cut = 1.0 - delta
    step = math.pi / (freq * cfg.osc_panel_fraction)
    points = np.arange(1, int(cut / step) + 1) * step
    points = points[points < cut * (1 - 1e-12)]

    # split the tolerance between the two pieces
    sub = QuadratureConfig(
        rel_tol=cfg.rel_tol / 2,
        abs_tol=cfg.abs_tol / 2,
        max_levels=cfg.max_levels,
        max_panels=cfg.max_panels,
        osc_panel_fraction=cfg.osc_panel_fraction,
    )
    if complement:
        # 1 - s >= delta on the body, so plain subtraction keeps full precision
        body_f = lambda s: f(s, 1.0 - s)  # noqa: E731
    else:
        body_f = f
    body = integrate_adaptive(body_f, 0.0, cut, sub, points=points)
    tail = integrate_endpoint_singular(f, sub, a=cut, b=1.0, complement=complement)
    return combine([body, tail], cfg)
