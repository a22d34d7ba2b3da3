"""Laplace exponent J of a Lévy model and the growth test for J' at infinity.

J(z) = -a z + q z**2 / 2 + int (exp(-z y) - 1 + z y 1{|y|<1}) nu(dy), z >= 0.

``LaplaceExponent`` evaluates J, J' and J'' from a ``LevyModel``;
``UserExponent`` lets callers inject J' directly (synthetic growth cases).
Both expose the same three vectorised methods, which is all the solver and
the verifiers rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from ._ordered import OrderedJprime
from .levy_model import AssumptionError, LevyModel

E2 = math.e**2


class LaplaceExponent:
    """J, J', J'' of a Lévy triple (a, q, nu)."""

    def __init__(self, model: LevyModel, lambda_bar: float | None = None, method: str = "auto"):
        nu = model.measure
        lo = -1.0 / lambda_bar if lambda_bar else -1.0
        small_sq = nu.moment(2, max(lo, nu.lower), 1.0) if nu.lower < 1.0 else 0.0
        tail_first = nu.moment(1, 1.0, math.inf)
        if not (math.isfinite(small_sq) and math.isfinite(tail_first)):
            raise AssumptionError(
                "J'(0) is not finite: need finite int y^2 nu near 0 and int_1^inf y nu "
                f"(got {small_sq}, {tail_first})"
            )
        self.model = model
        self.method = method
        self._cached = lru_cache(maxsize=65536)(self._scalar)
        self._ordered = None

    @property
    def drift(self):
        return self.model.drift

    def _scalar(self, kind, z):
        return float(self.model.measure.kernel(kind, z, method=self.method))

    def _kernel(self, kind, z):
        nu = self.model.measure
        if nu.closed_form and self.method in ("auto", "closed"):
            return nu.kernel(kind, z, method=self.method)
        z = np.asarray(z, dtype=float)
        if np.any(z < 0):
            raise ValueError("Laplace exponent is only evaluated for z >= 0")
        flat = np.array([self._cached(kind, float(v)) for v in z.ravel()])
        return flat.reshape(z.shape)

    def J(self, z):
        z = np.asarray(z, dtype=float)
        m = self.model
        with np.errstate(over="ignore", invalid="ignore"):
            return -m.drift * z + 0.5 * m.gaussian_q * z * z + self._kernel("J", z)

    def jprime(self, z):
        z = np.asarray(z, dtype=float)
        m = self.model
        with np.errstate(over="ignore", invalid="ignore"):
            return -m.drift + m.gaussian_q * z + self._kernel("Jp", z)

    def jsecond(self, z):
        z = np.asarray(z, dtype=float)
        return self.model.gaussian_q + self._kernel("Jpp", z)

    def jprime_ordered(self, z):
        """J' on fixed nonnegative-weight nodes: nondecreasing in z in floating point.

        Agrees with ``jprime`` to about 1e-14 relative; the solver uses it so
        that the operator A is exactly order-preserving.
        """
        m = self.model
        if self._ordered is None:
            try:
                self._ordered = OrderedJprime(m.measure)
            except ValueError:
                self._ordered = False
        if self._ordered is False:
            return self.jprime(z)
        z = np.asarray(z, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            return -m.drift + m.gaussian_q * z + self._ordered(z)

    def jprime_direct(self, z):
        """J' from one plain quadrature of the whole integrand (no splitting)."""
        m = self.model
        return -m.drift + m.gaussian_q * float(z) + m.measure.kernel_direct("Jp", float(z))


@dataclass(frozen=True)
class UserExponent:
    """Exponent given directly through J' (and optionally J, J'')."""

    jprime_fn: Callable
    j_fn: Callable | None = None
    jsecond_fn: Callable | None = None
    label: str = "user"

    def jprime(self, z):
        return np.asarray(self.jprime_fn(np.asarray(z, dtype=float)), dtype=float)

    def J(self, z):
        if self.j_fn is None:
            raise NotImplementedError(f"{self.label}: J not supplied")
        return np.asarray(self.j_fn(np.asarray(z, dtype=float)), dtype=float)

    def jsecond(self, z):
        if self.jsecond_fn is None:
            raise NotImplementedError(f"{self.label}: J'' not supplied")
        return np.asarray(self.jsecond_fn(np.asarray(z, dtype=float)), dtype=float)


def _cube_log_antiderivative(w, gamma):
    lg = np.log(gamma * w)
    return w * (lg**3 - 3 * lg**2 + 6 * lg - 6)


def cube_log_exponent(alpha, gamma, beta=0.0):
    """J'(z) = alpha ln^3(gamma (z + e^2)) + beta, with matching J and J''."""

    def jp(z):
        return alpha * np.log(gamma * (z + E2)) ** 3 + beta

    def jj(z):
        return alpha * (_cube_log_antiderivative(z + E2, gamma) - _cube_log_antiderivative(E2, gamma)) + beta * z

    def jpp(z):
        return 3 * alpha * np.log(gamma * (z + E2)) ** 2 / (z + E2)

    return UserExponent(jp, jj, jpp, label=f"cube_log(alpha={alpha}, gamma={gamma}, beta={beta})")


def constant_exponent(c):
    """J'(z) = c."""
    return UserExponent(lambda z: np.full_like(z, float(c)), lambda z: c * z, lambda z: np.zeros_like(z),
                        label=f"constant({c})")


def scaled_exponent(exponent, factor):
    """factor * J (so J' and J'' scale too); the martingale negative control."""

    def opt(name):
        fn = getattr(exponent, name)

        def g(z):
            return factor * fn(z)

        return g

    return UserExponent(opt("jprime"), opt("J"), opt("jsecond"), label=f"{factor} x exponent")


# ---------------------------------------------------------------------------
# Growth at infinity
# ---------------------------------------------------------------------------

SUBLOG = "SUBLOG"
SUPERCUBELOG = "SUPERCUBELOG"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class GrowthOptions:
    z_min: float = 1e1
    z_max: float = 1e12
    points_per_decade: int = 1
    sublog_top: float = 10.0  # ln z - lambda_bar T* J' must exceed this at z_max
    margin: float = 0.1  # J'/ln^3 z may drop by at most this fraction over the top half


@dataclass
class GrowthVerdict:
    kind: str
    z: np.ndarray
    jprime: np.ndarray
    sublog_diag: np.ndarray  # ln z - lambda_bar T* J'(z)
    cube_ratio: np.ndarray  # J'(z) / ln^3 z
    cube_fit: tuple = (math.nan, math.nan)  # (A, B) in J' ~ A ln^3 z + B over the top half
    reason: str = ""
    options: GrowthOptions = field(default_factory=GrowthOptions)


def growth_classify(exponent, lambda_bar, t_star, options: GrowthOptions | None = None) -> GrowthVerdict:
    """Decide SUBLOG / SUPERCUBELOG / INCONCLUSIVE on a geometric z-grid."""
    opt = options or GrowthOptions()
    n = int(round(math.log10(opt.z_max / opt.z_min) * opt.points_per_decade)) + 1
    z = np.geomspace(opt.z_min, opt.z_max, n)
    with np.errstate(all="ignore"):
        jp = np.array([float(exponent.jprime(v)) for v in z])
        lz = np.log(z)
        diag = lz - lambda_bar * t_star * jp
        ratio = jp / lz**3
    top = slice(n // 2, n)
    if not np.all(np.isfinite(jp)):
        return GrowthVerdict(INCONCLUSIVE, z, jp, diag, ratio, reason="J' overflowed or is not finite on the grid",
                             options=opt)
    basis = np.column_stack([lz[top] ** 3, np.ones(n - n // 2)])
    coef = tuple(float(c) for c in np.linalg.lstsq(basis, jp[top], rcond=None)[0])

    d = diag[top]
    if np.all(np.diff(d) > 0) and d[-1] > opt.sublog_top:
        return GrowthVerdict(SUBLOG, z, jp, diag, ratio, coef,
                             f"ln z - lambda_bar T* J' increasing over the top half and {d[-1]:.3g} > {opt.sublog_top}",
                             opt)
    r = ratio[top]
    if coef[0] > 0 and np.all(r > 0) and r[-1] >= (1 - opt.margin) * r[0]:
        return GrowthVerdict(SUPERCUBELOG, z, jp, diag, ratio, coef,
                             f"J'/ln^3 z stays above {(1 - opt.margin):.2f} of its top-half start (fit A={coef[0]:.3g})",
                             opt)
    return GrowthVerdict(INCONCLUSIVE, z, jp, diag, ratio, coef, "neither growth condition holds on the grid", opt)
