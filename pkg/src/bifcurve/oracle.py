"""Shooting oracle: integrate the ODE directly and check the boundary value.

In w = W(u) coordinates the equation [D(u)u']' + lambda g(u) = 0 becomes
w'' = -lambda g(u(w)), which stays bounded where D(0) = 0 makes the u-form
singular. By symmetry we start at the maximum, t = 1/2, with w = W(alpha),
w' = 0, march to t = 0 with classical RK4 and report how far w(0) is from 0.
Nothing here uses the time map, so agreement is an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NonFinite
from .model import ProblemFamily, scalar_functions


_EPS = np.finfo(float).eps


def _seed(spec, w):
    f = spec.family
    if f in (ProblemFamily.PURE_POWER, ProblemFamily.OSC_REACTION):
        return ((spec.k + 1) * w) ** (1.0 / (spec.k + 1))
    if f is ProblemFamily.OSC_DIFFUSION:
        e, p = 2 * spec.n + 1, spec.p
    else:
        e, p = 3, 1.0
    # W ~ u^2/2 near 0 (D(0) = 0, D'(0) = 1), W ~ p u^e / e far out
    if w < 0.5:
        return math.sqrt(2.0 * w)
    return (e * w / p) ** (1.0 / e)


def invert_W(spec, w, u0=None, *, funcs=None):
    """u >= 0 with W(u) = w, to a few ulps in u.

    Newton's method safeguarded by a bisection bracket; ``u0`` warm-starts
    the iteration (the RK4 loop passes the previous stage's root).
    """
    if w < 0:
        raise ValueError("w must be non-negative")
    if w == 0:
        return 0.0
    F = funcs or scalar_functions(spec)
    u = u0 if (u0 is not None and u0 > 0) else _seed(spec, w)
    lo, hi = 0.0, math.inf
    for _ in range(200):
        r = F.W(u) - w
        if r > 0:
            hi = min(hi, u)
        elif r < 0:
            lo = max(lo, u)
        else:
            return u
        d = F.D(u)
        un = u - r / d if d > 0 else math.nan
        if not lo < un < hi:
            un = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * u + 1.0
        if abs(un - u) <= 4.0 * _EPS * u:
            return un
        u = un
    raise NoConvergence(f"invert_W({w!r}) did not converge for {spec.label}")


@dataclass(frozen=True)
class ShootResult:
    boundary_residual: float
    energy_drift: float
    steps: int


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray  # decreasing from 1/2 to 0
    w: np.ndarray
    v: np.ndarray  # dw/dt
    u: np.ndarray
    result: ShootResult


def _march(spec, alpha, lam, step_count, record):
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if step_count < 100:
        raise ValueError("step_count must be >= 100")
    F = scalar_functions(spec)
    g, G = F.g, F.G
    w_top = F.W(alpha)
    g_top = G(alpha)
    state = {"u": alpha}

    def accel(w):
        # odd extension past w = 0 so overshooting trajectories stay defined
        if w >= 0:
            u = invert_W(spec, w, state["u"] if state["u"] > 0 else None, funcs=F)
            state["u"] = u
            return lam * g(u), u
        u = invert_W(spec, -w, None, funcs=F)
        return -lam * g(u), -u

    # tau = 1/2 - t runs forward: dw/dtau = -v, dv/dtau = lam g(u(w))
    h = 0.5 / step_count
    w, v = w_top, 0.0
    drift = 0.0
    norm = 2.0 * lam * g_top
    ts, ws, vs, us = ([], [], [], []) if record else (None, None, None, None)
    a1, u_n = accel(w)
    for i in range(step_count):
        e = abs(v * v - 2.0 * lam * (g_top - G(abs(u_n)))) / norm
        drift = max(drift, e)
        if record:
            ts.append(0.5 - i * h)
            ws.append(w)
            vs.append(v)
            us.append(u_n)
        k1w, k1v = -v, a1
        a2, _ = accel(w + 0.5 * h * k1w)
        k2w, k2v = -(v + 0.5 * h * k1v), a2
        a3, _ = accel(w + 0.5 * h * k2w)
        k3w, k3v = -(v + 0.5 * h * k2v), a3
        a4, _ = accel(w + h * k3w)
        k4w, k4v = -(v + h * k3v), a4
        w += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not (math.isfinite(w) and math.isfinite(v)):
            raise NonFinite(f"shooting state blew up at t={0.5 - (i + 1) * h:.6g}; lambda={lam!r} is inconsistent")
        a1, u_n = accel(w)
    if u_n >= 0:
        drift = max(drift, abs(v * v - 2.0 * lam * (g_top - G(u_n))) / norm)
    result = ShootResult(boundary_residual=w / w_top, energy_drift=drift, steps=step_count)
    if not record:
        return result
    ts.append(0.0)
    ws.append(w)
    vs.append(v)
    us.append(u_n)
    # dw/dtau = -v with tau = 1/2 - t, so v is already dw/dt
    return Trajectory(np.array(ts), np.array(ws), np.array(vs), np.array(us), result)


def shoot_halfinterval(spec, alpha, lam, step_count=10_000):
    """RK4 from t = 1/2 back to t = 0 with step 1 / (2 step_count).

    Returns w(0)/W(alpha) and the largest relative violation of
    (w')^2 = 2 lam (G(alpha) - G(u)) seen along the way.
    """
    return _march(spec, alpha, lam, step_count, record=False)


def trajectory(spec, alpha, lam, step_count=10_000):
    """Like :func:`shoot_halfinterval` but keeps every step."""
    return _march(spec, alpha, lam, step_count, record=True)


def shoot_converged(spec, alpha, lam, tol, start_steps=1000, max_steps=1 << 17):
    """Shoot with step doubling until the integrator's own error is below tol/10.

    Two error signals are watched: the change in boundary residual between
    successive step counts, and the energy drift (which the exact flow
    conserves, so any drift is integration error). The drift peaks at t = 0,
    where g(u(w)) loses smoothness when D(0) = 0.
    """
    prev = shoot_halfinterval(spec, alpha, lam, start_steps)
    n = start_steps
    while True:
        n *= 2
        cur = shoot_halfinterval(spec, alpha, lam, n)
        change = abs(cur.boundary_residual - prev.boundary_residual)
        settled = change <= tol / 10
        # a settled residual already outside tol cannot come back: stop early
        missed = settled and abs(cur.boundary_residual) - change > tol
        if (settled and cur.energy_drift <= tol / 10) or missed or n >= max_steps:
            return cur
        prev = cur


def verify_pair(spec, alpha, lam, tol=1e-6):
    """True iff the shot from (alpha, lam) lands on w(0) = 0 within ``tol``
    and the energy identity holds to 10 tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    res = shoot_converged(spec, alpha, lam, tol)
    return abs(res.boundary_residual) <= tol and res.energy_drift <= 10 * tol


def replay_profile(spec, profile, step_count=4000):
    """Largest |W(u_profile(t_j)) - w_shoot(t_j)| / W(alpha) over the samples.

    The comparison is made in w because u = W^{-1}(w) is not Lipschitz at
    w = 0 when D(0) = 0: a rounding-level w error near t = 0 would show up
    as a visible u error. The shot trajectory is interpolated with cubic
    Hermite steps.
    """
    from scipy.interpolate import CubicHermiteSpline

    tr = trajectory(spec, profile.alpha, profile.lam, step_count)
    spline = CubicHermiteSpline(tr.t[::-1], tr.w[::-1], tr.v[::-1])
    F = scalar_functions(spec)
    w_top = F.W(profile.alpha)
    worst = 0.0
    for tj, uj in profile.samples:
        w_shot = float(spline(min(max(tj, 0.0), 0.5)))
        worst = max(worst, abs(F.W(uj) - w_shot) / w_top)
    return worst
