"""Problem families for [D(u)u']' + lambda g(u) = 0 and their closed forms.

Every family carries a diffusion coefficient D, a reaction term g, and the
two antiderivatives used elsewhere in the package:

    W(u) = int_0^u D(x) dx          (shooting coordinates)
    G(u) = int_0^u D(x) g(x) dx     (energy / time map)

G is stored as a trigonometric polynomial

    G(u) = poly(u) + sum_w [P_w(u) sin(w u) + Q_w(u) cos(w u)]

which lets :func:`delta_G` form G(alpha) - G(alpha s) term by term with the
factor (1 - s) pulled out analytically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize_scalar

from .errors import AdmissibilityViolation


class ProblemFamily(str, enum.Enum):
    OSC_DIFFUSION = "osc-diffusion"  # D = p u^{2n} + sin u,  g = u
    OSC_REACTION = "osc-reaction"  # D = u^k,  g = u^{2m-k-1} + sin u
    OSC_BOTH = "osc-both"  # D = u^2 + sin u,  g = u + sin u
    PURE_POWER = "pure-power"  # D = u^k,  g = u^{2m-k-1}

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "oscdiffusion": cls.OSC_DIFFUSION,
            "oscreaction": cls.OSC_REACTION,
            "oscboth": cls.OSC_BOTH,
            "purepower": cls.PURE_POWER,
        }
        for member in cls:
            if member.value == key:
                return member
        try:
            return aliases[key.replace("-", "")]
        except KeyError:
            raise ValueError(f"unknown problem family {value!r}") from None


@dataclass(frozen=True)
class ProblemSpec:
    """A coefficient pair (D, g) with its parameters.

    ``n`` and ``p`` apply to OSC_DIFFUSION, ``k`` and ``m`` to OSC_REACTION
    and PURE_POWER. OSC_BOTH has no free parameters.
    """

    family: ProblemFamily
    n: int = 1
    p: float = 1.0
    k: int = 2
    m: int = 2

    def __post_init__(self):
        object.__setattr__(self, "family", ProblemFamily.parse(self.family))
        if self.family is ProblemFamily.OSC_DIFFUSION:
            if int(self.n) != self.n or self.n < 1:
                raise ValueError(f"n must be a positive integer, got {self.n}")
            if not self.p > 0:
                raise ValueError(f"p must be positive, got {self.p}")
        elif self.family in (ProblemFamily.OSC_REACTION, ProblemFamily.PURE_POWER):
            if int(self.m) != self.m or self.m < 1:
                raise ValueError(f"m must be a positive integer, got {self.m}")
            if int(self.k) != self.k or not 0 <= self.k < 2 * self.m - 1:
                raise ValueError(f"need 0 <= k < 2m-1, got k={self.k}, m={self.m}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "p", float(self.p))

    @property
    def label(self):
        f = self.family
        if f is ProblemFamily.OSC_DIFFUSION:
            return f"{f.value}(n={self.n},p={self.p:g})"
        if f is ProblemFamily.OSC_BOTH:
            return f.value
        return f"{f.value}(k={self.k},m={self.m})"

    def to_record(self):
        """Flat ``key -> str`` record (the CLI config-file format)."""
        return {
            "family": self.family.value,
            "n": str(self.n),
            "p": repr(self.p),
            "k": str(self.k),
            "m": str(self.m),
        }

    @classmethod
    def from_record(cls, record: Mapping[str, str]):
        allowed = {"family", "n", "p", "k", "m"}
        unknown = set(record) - allowed
        if unknown:
            raise ValueError(f"unknown keys in problem record: {sorted(unknown)}")
        if "family" not in record:
            raise ValueError("problem record needs a 'family' key")
        kwargs = {"family": record["family"]}
        for key in ("n", "k", "m"):
            if key in record:
                kwargs[key] = int(record[key])
        if "p" in record:
            kwargs["p"] = float(record["p"])
        return cls(**kwargs)

    def dumps(self):
        return "".join(f"{k} = {v}\n" for k, v in self.to_record().items())

    @classmethod
    def loads(cls, text):
        return cls.from_record(parse_flat_record(text))


def parse_flat_record(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    record = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        record[key] = value
    return record


# ---------------------------------------------------------------------------
# closed forms


@dataclass(frozen=True)
class _TrigPoly:
    """poly(u) + sum over (omega, P, Q) of P(u) sin(omega u) + Q(u) cos(omega u).

    Coefficient arrays are in ascending powers.
    """

    poly: np.ndarray
    trig: tuple = field(default=())

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = P.polyval(u, self.poly)
        for omega, ps, qs in self.trig:
            out = out + P.polyval(u, ps) * np.sin(omega * u) + P.polyval(u, qs) * np.cos(omega * u)
        return out


def _x_pow_sin_antiderivative(k):
    """(P, Q) with d/dx [P sin x + Q cos x] = x^k sin x.

    Built from int x^k sin = -x^k cos + k int x^{k-1} cos and
    int x^k cos = x^k sin - k int x^{k-1} sin.
    """
    s_p, s_q = np.zeros(1), np.array([-1.0])  # int sin = -cos
    c_p, c_q = np.array([1.0]), np.zeros(1)  # int cos = sin
    for j in range(1, k + 1):
        mono = np.zeros(j + 1)
        mono[j] = 1.0
        new_s_p = P.polyadd(np.zeros(1), j * c_p)
        new_s_q = P.polyadd(-mono, j * c_q)
        new_c_p = P.polyadd(mono, -j * s_p)
        new_c_q = P.polyadd(np.zeros(1), -j * s_q)
        s_p, s_q, c_p, c_q = new_s_p, new_s_q, new_c_p, new_c_q
    return s_p, s_q


def _potential(spec):
    f = spec.family
    if f is ProblemFamily.OSC_DIFFUSION:
        deg = 2 * spec.n + 2
        poly = np.zeros(deg + 1)
        poly[deg] = spec.p / deg
        return _TrigPoly(poly, ((1.0, np.array([1.0]), np.array([0.0, -1.0])),))
    if f is ProblemFamily.OSC_BOTH:
        poly = np.array([-2.0, 0.5, 0.0, 0.0, 0.25])
        return _TrigPoly(
            poly,
            (
                (1.0, np.array([1.0, 2.0]), np.array([2.0, -1.0, -1.0])),
                (2.0, np.array([-0.25]), np.zeros(1)),
            ),
        )
    deg = 2 * spec.m
    poly = np.zeros(deg + 1)
    poly[deg] = 1.0 / deg
    if f is ProblemFamily.PURE_POWER:
        return _TrigPoly(poly)
    ps, qs = _x_pow_sin_antiderivative(spec.k)
    poly[0] = -qs[0]  # subtract the antiderivative at 0 (cos 0 = 1, sin 0 = 0)
    return _TrigPoly(poly, ((1.0, ps, qs),))


def eval_D(spec, u):
    """Diffusion coefficient D(u)."""
    u = np.asarray(u, dtype=float)
    f = spec.family
    if f is ProblemFamily.OSC_DIFFUSION:
        out = spec.p * u ** (2 * spec.n) + np.sin(u)
    elif f is ProblemFamily.OSC_BOTH:
        out = u * u + np.sin(u)
    else:
        out = u**spec.k if spec.k else np.ones_like(u)
    return out[()] if out.ndim == 0 else out


def eval_g(spec, u):
    """Reaction term g(u)."""
    u = np.asarray(u, dtype=float)
    f = spec.family
    if f is ProblemFamily.OSC_DIFFUSION:
        out = u.copy()
    elif f is ProblemFamily.OSC_BOTH:
        out = u + np.sin(u)
    else:
        out = u ** (2 * spec.m - spec.k - 1)
        if f is ProblemFamily.OSC_REACTION:
            out = out + np.sin(u)
    return out[()] if out.ndim == 0 else out


def eval_G(spec, u):
    """G(u) = int_0^u D g.

    The closed form cancels badly for small u (its trig terms are O(1)
    while G is O(u^{k+2m})), so u <= 1 goes through Gauss-Legendre instead.
    """
    u = np.asarray(u, dtype=float)
    out = np.asarray(_potential(spec)(u), dtype=float)
    small = np.abs(u) <= 1.0
    if np.any(small):
        us = u[small] if u.ndim else u
        vals = [float(delta_G(spec, x, 0.0)) if x > 0 else 0.0 for x in np.atleast_1d(us)]
        if u.ndim:
            out = out.copy()
            out[small] = vals
        else:
            out = np.asarray(vals[0])
    return out[()] if out.ndim == 0 else out


def eval_W(spec, u):
    """W(u) = int_0^u D; 1 - cos u is written as 2 sin^2(u/2) to keep digits near 0."""
    u = np.asarray(u, dtype=float)
    f = spec.family
    if f is ProblemFamily.OSC_DIFFUSION:
        e = 2 * spec.n + 1
        out = spec.p * u**e / e + 2.0 * np.sin(0.5 * u) ** 2
    elif f is ProblemFamily.OSC_BOTH:
        out = u**3 / 3.0 + 2.0 * np.sin(0.5 * u) ** 2
    else:
        out = u ** (spec.k + 1) / (spec.k + 1)
    return out[()] if out.ndim == 0 else out


def one_minus_pow(s, c, j):
    """1 - s**j given s and its complement c = 1 - s, without cancellation."""
    s = np.asarray(s, dtype=float)
    c = np.asarray(c, dtype=float)
    if j == 0:
        return np.zeros(np.broadcast(s, c).shape)
    near = c < 0.5
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(near, -np.expm1(j * np.log1p(-np.minimum(c, 0.5))), 1.0 - s**j)
    return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def delta_G(spec, alpha, s, c=None):
    """G(alpha) - G(alpha s) for s in [0, 1], accurate as s -> 1.

    ``c`` is 1 - s; pass it when s is a quadrature node close to 1 so the
    difference keeps full relative precision.
    """
    s = np.asarray(s, dtype=float)
    c = 1.0 - s if c is None else np.asarray(c, dtype=float)
    if alpha <= 1.0:
        # short interval: Gauss-Legendre on [alpha s, alpha] avoids the
        # O(u) - O(u) cancellation of the trig terms at small u
        half = 0.5 * alpha * c
        x = alpha - half[..., None] * (1.0 - _GL_X)
        vals = eval_D(spec, x) * eval_g(spec, x)
        return half * (vals @ _GL_W)
    tp = _potential(spec)
    a = float(alpha)
    total = np.zeros(np.broadcast(s, c).shape)
    for j, coef in enumerate(tp.poly):
        if j and coef:
            total = total + coef * a**j * one_minus_pow(s, c, j)
    us = a * s
    for omega, ps, qs in tp.trig:
        mid = 0.5 * omega * a * (1.0 + s)
        half_gap = np.sin(0.5 * omega * a * c)
        dsin = 2.0 * np.cos(mid) * half_gap  # sin(wa) - sin(was)
        dcos = -2.0 * np.sin(mid) * half_gap  # cos(wa) - cos(was)
        for coefs, trig_a, dtrig in ((ps, math.sin(omega * a), dsin), (qs, math.cos(omega * a), dcos)):
            dpoly = np.zeros_like(total)
            for j, coef in enumerate(coefs):
                if j and coef:
                    dpoly = dpoly + coef * a**j * one_minus_pow(s, c, j)
            total = total + dpoly * trig_a + P.polyval(us, coefs) * dtrig
    return total


class ScalarFunctions(NamedTuple):
    D: object
    g: object
    W: object
    G: object


def scalar_functions(spec):
    """Plain-float closures of D, g, W, G for tight scalar loops."""
    sin, cos = math.sin, math.cos
    f = spec.family
    poly = [float(x) for x in _potential(spec).poly]
    trig = [(w, [float(x) for x in ps], [float(x) for x in qs]) for w, ps, qs in _potential(spec).trig]

    def horner(coefs, u):
        acc = 0.0
        for c in reversed(coefs):
            acc = acc * u + c
        return acc

    def G(u):
        out = horner(poly, u)
        for w, ps, qs in trig:
            out += horner(ps, u) * sin(w * u) + horner(qs, u) * cos(w * u)
        return out

    if f is ProblemFamily.OSC_DIFFUSION:
        p, e = spec.p, 2 * spec.n

        def D(u):
            return p * u**e + sin(u)

        def g(u):
            return u

        def W(u):
            s = sin(0.5 * u)
            return p * u ** (e + 1) / (e + 1) + 2.0 * s * s

    elif f is ProblemFamily.OSC_BOTH:

        def D(u):
            return u * u + sin(u)

        def g(u):
            return u + sin(u)

        def W(u):
            s = sin(0.5 * u)
            return u**3 / 3.0 + 2.0 * s * s

    else:
        k, r = spec.k, 2 * spec.m - spec.k - 1
        osc = f is ProblemFamily.OSC_REACTION

        def D(u):
            return u**k

        if osc:

            def g(u):
                return u**r + sin(u)

        else:

            def g(u):
                return u**r

        def W(u):
            return u ** (k + 1) / (k + 1)

    return ScalarFunctions(D, g, W, G)


# ---------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    worst_u: float
    min_D: float
    lambda_set_ok: bool


def validate_admissibility(spec, u_max, grid_points=10_000, *, raise_on_failure=True):
    """Scan D on (0, u_max] and refine each local minimum by golden section.

    Raises :class:`AdmissibilityViolation` (carrying the report) when the
    minimum of D is not positive, unless ``raise_on_failure`` is false.
    """
    if not u_max > 0:
        raise ValueError("u_max must be positive")
    if grid_points < 1000:
        raise ValueError("grid_points must be at least 1000")
    u = np.linspace(u_max / grid_points, u_max, grid_points)
    d = eval_D(spec, u)
    i_min = int(np.argmin(d))
    worst_u, min_D = float(u[i_min]), float(d[i_min])
    interior = np.flatnonzero((d[1:-1] <= d[:-2]) & (d[1:-1] <= d[2:])) + 1
    if interior.size > 64:
        interior = interior[np.argsort(d[interior])[:64]]
    for i in interior:
        if d[i - 1] == d[i] or d[i + 1] == d[i]:
            continue
        res = minimize_scalar(lambda x: float(eval_D(spec, x)), bracket=(u[i - 1], u[i], u[i + 1]), method="golden")
        if res.fun < min_D and 0 < res.x <= u_max:
            worst_u, min_D = float(res.x), float(res.fun)
    ok = min_D > 0
    g_ok = bool(np.all(eval_g(spec, u) > 0))
    report = AdmissibilityReport(ok=ok, worst_u=worst_u, min_D=min_D, lambda_set_ok=ok and g_ok)
    if not ok and raise_on_failure:
        raise AdmissibilityViolation(
            f"{spec.label}: D({worst_u:.6g}) = {min_D:.6g} <= 0 on (0, {u_max:g}]", report
        )
    return report
