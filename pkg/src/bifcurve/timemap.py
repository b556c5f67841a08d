"""lambda(alpha) from the generalized time map, plus solution profiles.

With u = alpha s the half-interval traversal time is

    T(alpha) = alpha * int_0^1 D(alpha s) / sqrt(G(alpha) - G(alpha s)) ds

and the eigenvalue is lambda = 2 T^2. The integrand blows up like
(1 - s)^{-1/2} at s = 1 and oscillates with frequency alpha when D or g
carries a sin term.
"""

from __future__ import annotations

import concurrent.futures as cf
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistentPair, QuadratureFailure
from .model import ProblemSpec, delta_G, eval_D, validate_admissibility
from .quadrature import (
    QuadratureConfig,
    combine,
    integrate_adaptive,
    integrate_endpoint_singular,
    integrate_oscillatory_singular,
)

SPACINGS = ("linear", "log", "phase-locked")
_PHASE0 = 0.75 * math.pi  # extrema of sin(alpha - pi/4)


@dataclass(frozen=True)
class CurvePoint:
    alpha: float
    lam: float
    err_estimate: float
    nodes_used: int
    converged: bool = True


@dataclass(frozen=True)
class AlphaGrid:
    """Grid descriptor.

    ``phase-locked`` places points at 3pi/4 + j pi / subdivisions inside
    [start, stop]; with the default single subdivision these are exactly the
    extrema of sin(alpha - pi/4). ``count`` is only used by linear/log grids.
    """

    start: float
    stop: float
    count: int = 2
    spacing: str = "linear"
    subdivisions: int = 1

    def __post_init__(self):
        if self.spacing not in SPACINGS:
            raise ValueError(f"spacing must be one of {SPACINGS}, got {self.spacing!r}")
        if not 0 < self.start < self.stop:
            raise ValueError(f"need 0 < start < stop, got [{self.start}, {self.stop}]")
        if self.count < 2:
            raise ValueError(f"count must be >= 2, got {self.count}")
        if self.subdivisions < 1:
            raise ValueError("subdivisions must be >= 1")

    def values(self):
        if self.spacing == "linear":
            return np.linspace(self.start, self.stop, self.count)
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        step = math.pi / self.subdivisions
        j0 = math.ceil((self.start - _PHASE0) / step)
        j1 = math.floor((self.stop - _PHASE0) / step)
        alphas = _PHASE0 + step * np.arange(j0, j1 + 1)
        alphas = alphas[alphas > 0]
        if alphas.size < 2:
            raise ValueError(f"phase-locked grid on [{self.start}, {self.stop}] has fewer than 2 points")
        return alphas

    def describe(self):
        return {
            "start": self.start,
            "stop": self.stop,
            "count": self.count,
            "spacing": self.spacing,
            "subdivisions": self.subdivisions,
        }


@dataclass(frozen=True)
class SweepResult:
    spec: ProblemSpec
    points: tuple
    grid_descriptor: dict = field(default_factory=dict)

    @property
    def alphas(self):
        return np.array([p.alpha for p in self.points])

    @property
    def lambdas(self):
        return np.array([p.lam for p in self.points])

    @property
    def all_converged(self):
        return all(p.converged for p in self.points)

    def to_csv(self, with_converged=None):
        return curve_csv(self.points, with_converged)


def _fmt(x):
    return format(float(x), ".16e")


def curve_csv(points, with_converged=None):
    """CSV text: ``alpha,lambda,err_estimate,nodes[,converged]``, 17 significant digits."""
    points = list(points)
    if with_converged is None:
        with_converged = not all(p.converged for p in points)
    buf = io.StringIO()
    header = ["alpha", "lambda", "err_estimate", "nodes"] + (["converged"] if with_converged else [])
    buf.write(",".join(header) + "\n")
    for p in points:
        row = [_fmt(p.alpha), _fmt(p.lam), _fmt(p.err_estimate), str(int(p.nodes_used))]
        if with_converged:
            row.append("true" if p.converged else "false")
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def read_curve_csv(text):
    """Parse :func:`curve_csv` output back into CurvePoints.

    Raises ValueError on a header or row that does not match the schema.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty curve CSV")
    header = [h.strip() for h in lines[0].split(",")]
    base = ["alpha", "lambda", "err_estimate", "nodes"]
    if header not in (base, base + ["converged"]):
        raise ValueError(f"unexpected CSV header {header}")
    points = []
    for lineno, line in enumerate(lines[1:], 2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(cells)}")
        converged = True
        if len(cells) == 5:
            if cells[4] not in ("true", "false"):
                raise ValueError(f"line {lineno}: converged must be true/false")
            converged = cells[4] == "true"
        points.append(CurvePoint(float(cells[0]), float(cells[1]), float(cells[2]), int(cells[3]), converged))
    return points


def admissibility_grid(u_max):
    # >= 64 samples per 2 pi, never fewer than 10^4
    return max(10_000, int(math.ceil(64 * u_max / (2 * math.pi))))


def time_map_integrand(spec, alpha):
    """s-form integrand of T(alpha), called as f(s, 1 - s)."""

    def f(s, c):
        return alpha * eval_D(spec, alpha * s) / np.sqrt(delta_G(spec, alpha, s, c))

    return f


def time_map(spec, alpha, cfg=None):
    """T(alpha) = sqrt(lambda / 2) as a QuadratureResult."""
    cfg = cfg or QuadratureConfig()
    return integrate_oscillatory_singular(time_map_integrand(spec, alpha), alpha, cfg, complement=True)


def lambda_of_alpha(spec, alpha, cfg=None, *, check=True, strict=True):
    """Eigenvalue lambda(alpha) = 2 T(alpha)^2.

    Raises AdmissibilityViolation when D is not positive on (0, alpha] and,
    with ``strict``, QuadratureFailure when the time map did not converge.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if check:
        validate_admissibility(spec, alpha, admissibility_grid(alpha))
    res = time_map(spec, alpha, cfg)
    lam = 2.0 * res.value**2
    point = CurvePoint(float(alpha), lam, 4.0 * abs(res.value) * res.err_estimate, res.nodes_used, res.converged)
    if strict and not res.converged:
        raise QuadratureFailure(
            f"time map for {spec.label} at alpha={alpha:.17g} did not converge (err {res.err_estimate:.3g})",
            alpha=alpha,
            result=point,
        )
    return point


def _point_task(args):
    spec, alpha, cfg = args
    return lambda_of_alpha(spec, alpha, cfg, check=False, strict=False)


def sweep_curve(spec, grid, cfg=None, *, workers=1, strict=True):
    """Evaluate lambda on every grid point, in increasing alpha.

    ``workers`` > 1 fans points out to a process pool (0 means one per
    CPU); results come back in grid order either way. With ``strict`` the
    first non-converged point raises QuadratureFailure with its alpha.
    """
    cfg = cfg or QuadratureConfig()
    alphas = [float(a) for a in grid.values()]
    validate_admissibility(spec, alphas[-1], admissibility_grid(alphas[-1]))
    tasks = [(spec, a, cfg) for a in alphas]
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_point_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        points = [_point_task(t) for t in tasks]
    if strict:
        for p in points:
            if not p.converged:
                raise QuadratureFailure(
                    f"time map for {spec.label} at alpha={p.alpha:.17g} did not converge", alpha=p.alpha, result=p
                )
    return SweepResult(spec, tuple(points), grid.describe())


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class SolutionProfile:
    alpha: float
    lam: float
    samples: tuple  # (t, u) pairs on [0, 1/2], u increasing
    err_estimate: float = 0.0

    @property
    def t(self):
        return np.array([s[0] for s in self.samples])

    @property
    def u(self):
        return np.array([s[1] for s in self.samples])


def solution_profile(spec, alpha, lam, sample_count=200, cfg=None):
    """u_alpha on [0, 1/2] from the inverse relation

        t(u) = (2 lam)^{-1/2} int_0^u D(x) / sqrt(G(alpha) - G(x)) dx,

    sampled at u_j = alpha sin(j pi / (2N)) so points cluster where t(u)
    flattens. Raises InconsistentPair if t(alpha) misses 1/2 by more than
    ten times the accumulated error (never less than the requested rel_tol).
    """
    cfg = cfg or QuadratureConfig()
    if sample_count < 2:
        raise ValueError("sample_count must be >= 2")
    f = time_map_integrand(spec, alpha)
    sig = np.sin(np.arange(sample_count + 1) * math.pi / (2 * sample_count))
    sig[-1] = 1.0
    step = math.pi / alpha
    pieces = []
    for lo, hi in zip(sig[:-2], sig[1:-1]):
        pts = np.arange(math.floor(lo / step) + 1, math.ceil(hi / step)) * step
        pieces.append(integrate_adaptive(lambda s: f(s, 1.0 - s), lo, hi, cfg, points=pts[(pts > lo) & (pts < hi)]))
    pieces.append(integrate_endpoint_singular(f, cfg, a=float(sig[-2]), b=1.0, complement=True))
    scale = 1.0 / math.sqrt(2.0 * lam)
    cum = np.concatenate([[0.0], np.cumsum([p.value for p in pieces])]) * scale
    total = combine(pieces)
    err = total.err_estimate * scale
    tol = 10.0 * max(err, cfg.rel_tol * 0.5)
    if abs(cum[-1] - 0.5) > tol:
        raise InconsistentPair(
            f"t(alpha) = {cum[-1]:.15g} differs from 1/2 by {abs(cum[-1] - 0.5):.3g} > {tol:.3g}; "
            f"lambda={lam!r} does not belong to alpha={alpha!r}"
        )
    u = alpha * sig
    return SolutionProfile(float(alpha), float(lam), tuple(zip(cum.tolist(), u.tolist())), err)
