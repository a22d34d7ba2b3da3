"""Lévy measures, the Lévy triple (a, q, nu) and the standing model checks.

Every measure exposes three kinds of Laplace-exponent integrals, selected by
``kind``:

* ``"J"``   -- integral of (exp(-z y) - 1 + z y 1{|y|<1}) nu(dy)
* ``"Jp"``  -- its z-derivative, y (1 - exp(-z y)) on |y| < 1, -y exp(-z y) else
* ``"Jpp"`` -- the second derivative, y**2 exp(-z y)

Closed forms are used where a family has one (``method="closed"``); every
density family can also be integrated numerically (``method="quad"``) and by a
single plain quadrature over the whole support (``kernel_direct``). The
closed/quad pair is what the test-suite cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np
from scipy import special

from ._quadrature import (
    log1mexp,
    log_compensated_neg,
    log_compensated_pos,
    log_expm1,
    quad_exp,
    quad_plain,
    shell_integral,
)

KINDS = ("J", "Jp", "Jpp")
INF = math.inf


class AssumptionError(ValueError):
    """Raised when a model violates the standing assumptions; carries the report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# Measure families
# ---------------------------------------------------------------------------


class LevyMeasure:
    """Base class; subclasses set ``lower``/``upper`` and a density or atoms."""

    name = "measure"
    has_density = True
    closed_form = False  # True if kernels J'/J'' have closed forms
    lower = 0.0
    upper = 0.0

    # -- density -----------------------------------------------------------
    def density(self, y):
        raise NotImplementedError

    def _log_density_s(self, s, side):
        """ln g(side * exp(-s)); overridden where that would overflow."""
        g = self.density(side * math.exp(-s))
        return math.log(g) if g > 0 else -INF

    # -- parameters for config echo ------------------------------------------
    def params(self) -> dict:
        return {}

    @property
    def support(self):
        return (self.lower, self.upper)

    # -- moments -------------------------------------------------------------
    def moment(self, k, a=-INF, b=INF, method="auto"):
        """Integral of y**k over (a, b) against nu. May return math.inf."""
        a = max(a, self.lower)
        b = min(b, self.upper)
        if not b > a:
            return 0.0
        if method in ("auto", "closed"):
            value = self._moment_closed(k, a, b)
            if value is not None:
                return value
            if method == "closed":
                raise NotImplementedError(f"{self.name}: no closed-form moment of order {k}")
        return self._moment_quad(k, a, b)

    def _moment_closed(self, k, a, b):
        return None

    def _moment_quad(self, k, a, b):
        total = 0.0
        checked = getattr(self, "check_divergence", False)
        near = shell_integral if checked else (lambda lf, lo, hi=INF: quad_exp(lf, lo, hi))
        # negative side
        if a < 0:
            lo, hi = a, min(b, 0.0)
            if lo < -1:
                far_hi = min(hi, -1.0)
                total += self._far_moment(k, lo, far_hi)
            n_lo, n_hi = max(lo, -1.0), hi
            if n_hi > n_lo:
                s_lo = -math.log(-n_lo)
                s_hi = INF if n_hi == 0 else -math.log(-n_hi)
                sign = -1.0 if k % 2 else 1.0
                lf = lambda s: -(k + 1) * s + self._log_density_s(s, -1.0)
                total += sign * (near(lf, s_lo, s_hi) if s_hi < INF else near(lf, s_lo))
        if b > 0:
            lo, hi = max(a, 0.0), b
            n_lo, n_hi = lo, min(hi, 1.0)
            if n_hi > n_lo:
                s_lo = -math.log(n_hi)
                s_hi = INF if n_lo == 0 else -math.log(n_lo)
                lf = lambda s: -(k + 1) * s + self._log_density_s(s, 1.0)
                total += near(lf, s_lo, s_hi) if s_hi < INF else near(lf, s_lo)
            if hi > 1:
                total += self._far_moment(k, max(lo, 1.0), hi)
        return total

    def _far_moment(self, k, lo, hi):
        """Integral over a region with |y| >= 1, via y = +-exp(s)."""
        side = 1.0 if lo >= 0 else -1.0
        a_abs, b_abs = sorted((abs(lo), abs(hi)))
        s_lo = math.log(a_abs)
        # y = e^300 keeps y^2 and typical densities inside double range
        s_hi = math.log(b_abs) if b_abs < INF else 300.0

        def lf(s):
            g = self.density(side * math.exp(s))
            return (k + 1) * s + math.log(g) if g > 0 else -INF

        sign = (side ** k) if k % 2 else 1.0
        if getattr(self, "check_divergence", False) or b_abs == INF:
            return sign * shell_integral(lf, s_lo, s_hi)
        return sign * quad_exp(lf, s_lo, s_hi)

    def mass(self, a=-INF, b=INF):
        return self.moment(0, a, b)

    # -- Laplace exponent kernels ------------------------------------------
    def kernel(self, kind, z, method="auto"):
        """Vectorised measure part of J, J' or J'' at z >= 0."""
        if kind not in KINDS:
            raise ValueError(f"unknown kernel kind {kind!r}")
        z = np.asarray(z, dtype=float)
        if np.any(z < 0):
            raise ValueError("Laplace exponent is only evaluated for z >= 0")
        if method in ("auto", "closed"):
            out = self._kernel_closed(kind, z)
            if out is not None:
                return out
            if method == "closed":
                raise NotImplementedError(f"{self.name}: no closed form for {kind}")
        flat = np.array([self._kernel_quad(kind, float(v)) for v in z.ravel()])
        return flat.reshape(z.shape)

    def _kernel_closed(self, kind, z):
        return None

    def _kernel_quad(self, kind, z):
        lo_s, hi_s = self.lower, self.upper
        total = 0.0
        pts = (math.log(z) - 3.0, math.log(z), math.log(z) + 3.0) if z > 0 else ()
        # at z = 0 the compensated near-zero kernels of J and J' vanish
        skip_near = z == 0 and kind in ("J", "Jp")
        # near-zero regions in s = -ln|y|
        for side in (-1.0, 1.0):
            if side < 0:
                if lo_s >= 0:
                    continue
                n_lo_abs, n_hi_abs = max(0.0, -min(hi_s, 0.0)), min(1.0, -lo_s)
            else:
                if hi_s <= 0:
                    continue
                n_lo_abs, n_hi_abs = max(0.0, lo_s), min(1.0, hi_s)
            if skip_near or not n_hi_abs > n_lo_abs:
                continue
            s_lo = -math.log(n_hi_abs)
            s_hi = INF if n_lo_abs == 0 else -math.log(n_lo_abs)
            lk = _near_log_kernel(kind, z, side)
            lf = lambda s, lk=lk, side=side: lk(s) + self._log_density_s(s, side) - s
            total += quad_exp(lf, s_lo, s_hi, pts)
        # far regions, |y| >= 1, plain quadrature in y
        if lo_s < -1:
            total += self._far_kernel(kind, z, lo_s, min(hi_s, -1.0))
        if hi_s > 1:
            total += self._far_kernel(kind, z, max(lo_s, 1.0), hi_s)
        return total

    def _far_kernel(self, kind, z, lo, hi):
        if not hi > lo:
            return 0.0
        f = _far_kernel_fn(kind, z)
        if z > 0 and lo >= 1 and kind in ("Jp", "Jpp"):
            # exp(-z y) has fallen below 1e-16 of its value at y = lo
            hi = min(hi, lo + 37.0 / z + 1.0)
        g = lambda y: f(y) * self.density(y)
        return quad_plain(g, lo, hi)

    def kernel_direct(self, kind, z):
        """Single plain quadrature of the full integrand over the support."""
        z = float(z)
        lo, hi = self.lower, self.upper

        def integrand(y):
            if y == 0.0:
                return 0.0
            g = self.density(y)
            zy = z * y
            if abs(y) < 1:
                if kind == "J":
                    if abs(zy) < 1e-3:
                        return zy * zy * (0.5 - zy / 6.0 + zy * zy / 24.0 - zy**3 / 120.0) * g
                    return (math.expm1(-zy) + zy) * g
                if kind == "Jp":
                    return -y * math.expm1(-zy) * g
            else:
                if kind == "J":
                    return math.expm1(-zy) * g
                if kind == "Jp":
                    return -y * math.exp(-zy) * g
            return y * y * math.exp(-zy) * g

        if z > 0 and hi > 1 and kind in ("Jp", "Jpp"):
            hi = min(hi, max(lo, 1.0) + 37.0 / z + 1.0)
        pts = [-1.0, 0.0, 1.0]
        if z > 0:
            pts += [sgn * c / z for sgn in (-1, 1) for c in (1e-2, 1e-1, 1.0, 10.0, 40.0)]
        try:
            return quad_plain(integrand, lo, hi, points=pts)
        except OverflowError:
            return INF

    # -- simulation support --------------------------------------------------
    def tail_mass(self, eps):
        return self.mass(eps, INF)

    def sample_sizes(self, rng, n, eps):
        """Draw n jump sizes from nu restricted to [eps, upper), normalised."""
        if n == 0:
            return np.empty(0)
        lo = max(eps, self.lower)
        hi = self.upper
        if lo <= 0:
            # finite-mass density down to 0: the tabulated CDF starts just above 0
            lo = 1e-12 * min(hi, 1.0)
        if hi == INF:
            total = self.mass(lo, INF)
            hi = max(2.0, lo * 2)
            while self.mass(hi, INF) > 1e-12 * total:
                hi *= 2.0
        ys = np.geomspace(lo, hi, 4001)
        dens = np.array([self.density(y) for y in ys]) * ys
        logs = np.log(ys)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(logs))])
        cdf /= cdf[-1]
        return np.exp(np.interp(rng.random(n), cdf, logs))


def _near_log_kernel(kind, z, side):
    """Log of the (positive) near-zero kernel in s = -ln|y|."""
    if side > 0:
        if kind == "Jpp":
            return lambda s: -2.0 * s - z * math.exp(-s)
        if kind == "Jp":
            return lambda s: -s + log1mexp(z * math.exp(-s))
        return lambda s: log_compensated_neg(z * math.exp(-s))
    if kind == "Jpp":
        return lambda s: -2.0 * s + z * math.exp(-s)
    if kind == "Jp":
        return lambda s: -s + log_expm1(z * math.exp(-s))
    return lambda s: log_compensated_pos(z * math.exp(-s))


def _far_kernel_fn(kind, z):
    if kind == "Jpp":
        return lambda y: y * y * math.exp(-z * y)
    if kind == "Jp":
        return lambda y: -y * math.exp(-z * y)
    return lambda y: math.expm1(-z * y)


# -- closed-form building blocks --------------------------------------------


def _series_block(z, a, b, k, start, sign, terms=40):
    """sum_{n >= start} c_n z**n (b**(n+k+1) - a**(n+k+1)) / (n! (n+k+1)).

    c_n = (-1)**n for sign=+1, (-1)**(n+1) for sign=-1. Used where z*max|y| <= 1.
    """
    out = np.zeros_like(z)
    zn = np.ones_like(z)
    fact = 1.0
    for n in range(terms):
        if n > 0:
            zn = zn * z
            fact *= n
        if n < start:
            continue
        e = n + k + 1
        c = (-1.0) ** n if sign > 0 else (-1.0) ** (n + 1)
        out = out + c * zn * (b**e - a**e) / (fact * e)
    return out


def _exp_moment(k, z, a, b):
    """Integral of y**k exp(-z y) over (a, b), k in {0, 1, 2}, vectorised in z."""
    z = np.asarray(z, dtype=float)
    m = max(abs(a), abs(b))
    small = z * m <= 1.0
    out = np.empty_like(z)
    if np.any(small):
        out[small] = _series_block(z[small], a, b, k, 0, +1)
    big = ~small
    if np.any(big):
        zb = z[big]
        with np.errstate(over="ignore"):
            ea, eb = np.exp(-zb * a), np.exp(-zb * b)
            if k == 0:
                out[big] = (ea - eb) / zb
            elif k == 1:
                out[big] = (ea * (zb * a + 1) - eb * (zb * b + 1)) / zb**2
            else:
                out[big] = (
                    ea * (zb**2 * a**2 + 2 * zb * a + 2) - eb * (zb**2 * b**2 + 2 * zb * b + 2)
                ) / zb**3
    return out


def _uniform_region(kind, z, a, b, compensated):
    """Closed-form kernel over (a, b) for unit density."""
    if kind == "Jpp":
        return _exp_moment(2, z, a, b)
    m = max(abs(a), abs(b))
    small = z * m <= 1.0
    out = np.empty_like(z)
    if compensated:
        if kind == "Jp":
            # sum_{n>=1} (-1)**(n+1) z**n int y**(n+1)
            if np.any(small):
                out[small] = _series_block(z[small], a, b, 1, 1, -1)
            if np.any(~small):
                out[~small] = 0.5 * (b * b - a * a) - _exp_moment(1, z[~small], a, b)
        else:
            if np.any(small):
                out[small] = _series_block(z[small], a, b, 0, 2, +1)
            if np.any(~small):
                zb = z[~small]
                out[~small] = _exp_moment(0, zb, a, b) - (b - a) + 0.5 * zb * (b * b - a * a)
        return out
    if kind == "Jp":
        return -_exp_moment(1, z, a, b)
    return _exp_moment(0, z, a, b) - (b - a)


def _regions(lo, hi):
    """Split (lo, hi) into pieces with compensation flag (|y| < 1)."""
    out = []
    for a, b, comp in ((-INF, -1.0, False), (-1.0, 1.0, True), (1.0, INF, False)):
        aa, bb = max(lo, a), min(hi, b)
        if bb > aa:
            out.append((aa, bb, comp))
    return out


@dataclass(frozen=True)
class TruncatedStable(LevyMeasure):
    """nu(dy) = y**(-1-p) dy on (0, 1), 0 < p < 2."""

    p: float
    name = "TruncatedStable"
    closed_form = True
    lower = 0.0
    upper = 1.0

    def __post_init__(self):
        if not 0 < self.p < 2:
            raise ValueError(f"TruncatedStable needs 0 < p < 2, got p={self.p}")

    def params(self):
        return {"p": self.p}

    def density(self, y):
        return y ** (-1.0 - self.p) if 0 < y < 1 else 0.0

    def _log_density_s(self, s, side):
        return (1.0 + self.p) * s if side > 0 and s > 0 else -INF

    def _moment_closed(self, k, a, b):
        a, b = max(a, 0.0), min(b, 1.0)
        if not b > a:
            return 0.0
        e = k - self.p
        if a == 0 and e <= 0:
            return INF
        if e == 0:
            return math.log(b / a)
        return (b**e - a**e) / e

    def _kernel_closed(self, kind, z):
        p = self.p
        out = np.empty_like(z)
        small = z <= 1.0
        zs, zb = z[small], z[~small]
        if kind == "Jpp":
            out[small] = _series_tstable(zs, p, 0)
            out[~small] = zb ** (p - 2) * special.gamma(2 - p) * special.gammainc(2 - p, zb)
            return out
        jp_big = self._jp_big(zb)
        if kind == "Jp":
            out[small] = _series_tstable(zs, p, 1)
            out[~small] = jp_big
            return out
        out[small] = _series_tstable(zs, p, 2)
        out[~small] = (zb * jp_big - (np.expm1(-zb) + zb)) / p
        return out

    def _jp_big(self, z):
        p = self.p
        if p == 1.0:
            return special.exp1(z) + np.log(z) + np.euler_gamma
        lower_gamma = special.gamma(2 - p) * special.gammainc(2 - p, z)
        return (-np.expm1(-z) - z ** (p - 1) * lower_gamma) / (1 - p)

    def tail_mass(self, eps):
        if eps >= 1:
            return 0.0
        return (eps ** (-self.p) - 1.0) / self.p

    def sample_sizes(self, rng, n, eps):
        p = self.p
        u = rng.random(n)
        top = eps ** (-p)
        return (top - u * (top - 1.0)) ** (-1.0 / p)


def _series_tstable(z, p, which):
    """Power series of J2'' (which=0), J2' (which=1) or J2 (which=2) for y**(-1-p) on (0, 1)."""
    out = np.full_like(z, 1.0 / (2 - p)) if which == 0 else np.zeros_like(z)
    zn = np.ones_like(z)
    fact = 1.0
    for n in range(1, 30):
        zn = zn * z
        fact *= n
        if which == 0:
            out = out + (-1.0) ** n * zn / (fact * (n + 2 - p))
        elif which == 1:
            out = out + (-1.0) ** (n + 1) * zn / (fact * (n + 1 - p))
        elif n >= 2:
            out = out + (-1.0) ** n * zn / (fact * (n - p))
    return out


@dataclass(frozen=True)
class LogModified(LevyMeasure):
    """nu(dy) = dy / (y**2 |ln y|**gamma) on (0, 1/2), gamma > 0."""

    gamma: float
    name = "LogModified"
    lower = 0.0
    upper = 0.5

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"LogModified needs gamma > 0, got {self.gamma}")

    def params(self):
        return {"gamma": self.gamma}

    def density(self, y):
        return 1.0 / (y * y * abs(math.log(y)) ** self.gamma) if 0 < y < 0.5 else 0.0

    def _log_density_s(self, s, side):
        if side < 0 or s <= math.log(2.0):
            return -INF
        return 2.0 * s - self.gamma * math.log(s)

    def _moment_closed(self, k, a, b):
        a, b = max(a, 0.0), min(b, 0.5)
        if not b > a:
            return 0.0
        g = self.gamma
        s1 = -math.log(b)
        s2 = INF if a == 0 else -math.log(a)
        if k == 1:
            if s2 == INF and g <= 1:
                return INF
            if g == 1:
                return math.log(s2 / s1)
            f = lambda s: 0.0 if s == INF else s ** (1 - g) / (1 - g)
            return f(s2) - f(s1)
        if k >= 2:
            m = k - 1
            upper = mpmath.inf if s2 == INF else m * s2
            return float(m ** (g - 1) * mpmath.gammainc(1 - g, m * s1, upper))
        if a == 0:
            return INF
        return None


@dataclass(frozen=True)
class LogPowerDensity(LevyMeasure):
    """Density with U(x) = x / (ln 1/x)**gamma near 0, on (0, upper).

    g(y) = y**-2 * (L**gamma + gamma L**(gamma-1)) / L**(2 gamma), L = ln(1/y).
    The density is not integrable against y**2 up to y = 1, so the support is
    cut at ``upper`` < 1 (default 1/2).
    """

    gamma: float
    cut: float = 0.5
    name = "LogPowerDensity"
    lower = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"LogPowerDensity needs gamma > 0, got {self.gamma}")
        if not 0 < self.cut < 1:
            raise ValueError("LogPowerDensity support must end below 1")

    @property
    def upper(self):
        return self.cut

    def params(self):
        return {"gamma": self.gamma, "upper": self.cut}

    def density(self, y):
        if not 0 < y < self.cut:
            return 0.0
        L = math.log(1.0 / y)
        g = self.gamma
        return (L ** (-g) + g * L ** (-g - 1)) / (y * y)

    def _log_density_s(self, s, side):
        if side < 0 or s <= -math.log(self.cut):
            return -INF
        g = self.gamma
        return 2.0 * s + math.log(s ** (-g) + g * s ** (-g - 1))

    def u_closed(self, x):
        x = min(x, self.cut)
        if x <= 0:
            return 0.0
        return x / math.log(1.0 / x) ** self.gamma

    def _moment_closed(self, k, a, b):
        a, b = max(a, 0.0), min(b, self.cut)
        if not b > a:
            return 0.0
        g = self.gamma
        if k == 2:
            return self.u_closed(b) - self.u_closed(a)
        if k == 1:
            l1 = -math.log(b)
            l2 = INF if a == 0 else -math.log(a)
            if l2 == INF and g <= 1:
                return INF

            def F(L):
                if L == INF:
                    return 0.0
                head = math.log(L) if g == 1 else L ** (1 - g) / (1 - g)
                return head - L ** (-g)

            return F(l2) - F(l1)
        if a == 0 and k <= 1:
            return INF
        return None


@dataclass(frozen=True)
class UniformDensity(LevyMeasure):
    """Constant density c on (lo, hi)."""

    c: float
    lo: float
    hi: float
    name = "UniformDensity"
    closed_form = True

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("UniformDensity needs c >= 0")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.hi > self.lo):
            raise ValueError(f"malformed support interval ({self.lo}, {self.hi})")

    @property
    def lower(self):
        return self.lo

    @property
    def upper(self):
        return self.hi

    def params(self):
        return {"c": self.c, "support": [self.lo, self.hi]}

    def density(self, y):
        return self.c if self.lo < y < self.hi else 0.0

    def _moment_closed(self, k, a, b):
        if a == 0 and b > 0 and k < 0:
            return INF
        if k == -1:
            return None
        return self.c * (b ** (k + 1) - a ** (k + 1)) / (k + 1)

    def _kernel_closed(self, kind, z):
        out = np.zeros_like(z)
        for a, b, comp in _regions(self.lo, self.hi):
            out = out + _uniform_region(kind, z, a, b, comp)
        return self.c * out

    def sample_sizes(self, rng, n, eps):
        lo = max(eps, self.lo)
        return lo + (self.hi - lo) * rng.random(n)


@dataclass(frozen=True)
class FiniteAtomList(LevyMeasure):
    """Finite sum of point masses: nu = sum_i m_i delta_{y_i}."""

    points: tuple = ()
    masses: tuple = ()
    name = "FiniteAtomList"
    has_density = False
    closed_form = True

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        if len(self.points) != len(self.masses):
            raise ValueError("points and masses must have equal length")
        if any(m < 0 for m in self.masses):
            raise ValueError("atom masses must be nonnegative")
        if any(p == 0 for p in self.points):
            raise ValueError("a Lévy measure carries no mass at 0")

    @property
    def lower(self):
        live = [p for p, m in zip(self.points, self.masses) if m > 0]
        return min(live) if live else 0.0

    @property
    def upper(self):
        live = [p for p, m in zip(self.points, self.masses) if m > 0]
        return max(live) if live else 0.0

    def params(self):
        return {"points": list(self.points), "masses": list(self.masses)}

    def moment(self, k, a=-INF, b=INF, method="auto"):
        return float(sum(m * y**k for y, m in zip(self.points, self.masses) if a <= y < b))

    def _moment_quad(self, k, a, b):
        return self.moment(k, a, b)

    def _kernel_closed(self, kind, z):
        out = np.zeros_like(z)
        with np.errstate(over="ignore"):
            for y, m in zip(self.points, self.masses):
                if kind == "Jpp":
                    out = out + m * y * y * np.exp(-z * y)
                elif abs(y) < 1:
                    out = out + m * (-y * np.expm1(-z * y) if kind == "Jp" else np.expm1(-z * y) + z * y)
                else:
                    out = out + m * (-y * np.exp(-z * y) if kind == "Jp" else np.expm1(-z * y))
        return out

    def _kernel_quad(self, kind, z):
        return float(self._kernel_closed(kind, np.array([z]))[0])

    def kernel_direct(self, kind, z):
        return self._kernel_quad(kind, float(z))

    def tail_mass(self, eps):
        return self.moment(0, eps, INF)

    def sample_sizes(self, rng, n, eps):
        pts = np.array([p for p, m in zip(self.points, self.masses) if p >= eps and m > 0])
        w = np.array([m for p, m in zip(self.points, self.masses) if p >= eps and m > 0])
        if n == 0:
            return np.empty(0)
        return pts[rng.choice(len(pts), size=n, p=w / w.sum())]


def ZeroMeasure():
    return FiniteAtomList((), ())


@dataclass(frozen=True, eq=False)
class UserDensity(LevyMeasure):
    """Arbitrary density callable on (lo, hi); quadrature only."""

    fn: Callable[[float], float]
    lo: float
    hi: float
    name = "UserDensity"
    check_divergence = True

    def __post_init__(self):
        if not (self.hi > self.lo) or math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError(f"malformed support interval ({self.lo}, {self.hi})")
        lo = self.lo if math.isfinite(self.lo) else -1e6
        hi = self.hi if math.isfinite(self.hi) else 1e6
        probe = np.linspace(lo, hi, 203)[1:-1]
        if any(self.fn(float(y)) < 0 for y in probe if y != 0):
            raise ValueError("density must be nonnegative on its support")
        if not math.isfinite(self.moment(2, -1.0, 1.0)) or not math.isfinite(self.mass(-INF, -1.0) + self.mass(1.0, INF)):
            raise ValueError("density violates the integrability condition int min(y^2, 1) nu(dy) < inf")

    @property
    def lower(self):
        return self.lo

    @property
    def upper(self):
        return self.hi

    def density(self, y):
        return float(self.fn(y)) if self.lo < y < self.hi else 0.0


MEASURE_FAMILIES = {
    "TruncatedStable": TruncatedStable,
    "LogModified": LogModified,
    "LogPowerDensity": LogPowerDensity,
    "UniformDensity": UniformDensity,
    "FiniteAtomList": FiniteAtomList,
}


def measure_from_config(block: dict) -> LevyMeasure:
    """Build a measure from ``{"family": name, ...params}``."""
    block = dict(block)
    family = block.pop("family", "FiniteAtomList")
    if family in ("Zero", "ZeroMeasure", "none"):
        return ZeroMeasure()
    if family == "UniformDensity":
        support = block.pop("support", [0.0, 1.0])
        return UniformDensity(c=float(block.pop("c", 1.0)), lo=float(support[0]), hi=float(support[1]))
    if family == "LogPowerDensity" and "upper" in block:
        block["cut"] = block.pop("upper")
    if family not in MEASURE_FAMILIES:
        raise KeyError(f"unknown measure family {family!r}")
    return MEASURE_FAMILIES[family](**block)


# ---------------------------------------------------------------------------
# The model and its checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyModel:
    drift: float = 0.0
    gaussian_q: float = 0.0
    measure: LevyMeasure = field(default_factory=ZeroMeasure)

    def __post_init__(self):
        if self.gaussian_q < 0:
            raise ValueError("gaussian_q must be >= 0")


@dataclass
class AssumptionReport:
    a1_ok: bool
    a2_ok: bool
    a4_ok: bool
    a3_note: str
    f0_min: float
    lambda_bar: float
    support_lower: float
    support_upper: float
    a4_small_square: float
    a4_tail_first: float

    @property
    def ok(self):
        return self.a1_ok and self.a2_ok and self.a4_ok

    def failures(self):
        names = {"a1_ok": "initial curve must be positive", "a2_ok": "measure support must lie in (-1/lambda_bar, inf)",
                 "a4_ok": "second moment near 0 / first moment above 1 must be finite"}
        return [msg for key, msg in names.items() if not getattr(self, key)]


def a2_holds(support_lower, lambda_bar):
    return support_lower > -1.0 / lambda_bar


def validate_assumptions(model: LevyModel, lambda_bar: float, f0, t_star: float = 1.0, lam=None,
                         n_samples: int = 1001) -> AssumptionReport:
    """Check the standing assumptions on (model, lambda_bar, f0)."""
    if not lambda_bar > 0:
        raise ValueError("lambda_bar must be positive")
    nu = model.measure
    if not nu.upper >= nu.lower:
        raise ValueError("malformed support interval")
    ts = np.linspace(0.0, t_star, n_samples)
    f0_min = float(np.min(f0(ts)))
    lo = nu.lower
    small_sq = nu.moment(2, -1.0 / lambda_bar, 1.0)
    tail_first = nu.moment(1, 1.0, INF)
    if lam is None:
        note = "lambda not supplied; (A3) not checked"
    else:
        note = lam.a3_note()
    return AssumptionReport(
        a1_ok=f0_min > 0 and getattr(f0, "continuous", True),
        a2_ok=a2_holds(lo, lambda_bar),
        a4_ok=math.isfinite(small_sq) and math.isfinite(tail_first),
        a3_note=note,
        f0_min=f0_min,
        lambda_bar=lambda_bar,
        support_lower=lo,
        support_upper=nu.upper,
        a4_small_square=small_sq,
        a4_tail_first=tail_first,
    )


def u_nu(model: LevyModel, x: float, method="auto") -> float:
    """U(x) = integral of y**2 over (0, x] against nu."""
    if x <= 0:
        raise ValueError("u_nu needs x > 0")
    nu = model.measure
    if isinstance(nu, FiniteAtomList):
        return nu.moment(2, 0.0, np.nextafter(x, INF))
    if method == "auto" and isinstance(nu, LogPowerDensity):
        return nu.u_closed(x)
    return nu.moment(2, 0.0, x, method=method)


@dataclass
class MomentIntegrals:
    tail_first: float  # int_1^inf y nu
    small_square: float  # int_0^1 y^2 nu
    small_first: float  # int_0^1 y nu, may be inf
    neg_mass: float  # nu((-1/lambda_bar, 0))
    tail_square: float  # int_1^inf y^2 nu

    def finite(self, name):
        return math.isfinite(getattr(self, name))


def moment_integrals(model: LevyModel, lambda_bar: float | None = None) -> MomentIntegrals:
    nu = model.measure
    neg_lo = -1.0 / lambda_bar if lambda_bar else -INF
    neg = nu.mass(neg_lo, 0.0) if nu.lower < 0 else 0.0
    if neg_lo > -INF and nu.lower < 0 and nu.lower <= neg_lo:
        # mass exactly at the boundary is excluded from the open interval
        neg = nu.mass(np.nextafter(neg_lo, 0.0), 0.0)
    return MomentIntegrals(
        tail_first=nu.moment(1, 1.0, INF),
        small_square=nu.moment(2, 0.0, 1.0) if nu.upper > 0 else 0.0,
        small_first=nu.moment(1, 0.0, 1.0) if nu.upper > 0 else 0.0,
        neg_mass=neg,
        tail_square=nu.moment(2, 1.0, INF),
    )

