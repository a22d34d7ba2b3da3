"""Fixed-point solver for f = A f on the triangular grid, and blow-up tools.

(A h)(t, T) = a(t, T) exp( int_0^t J'( int_s^T lambda(s,u) h(s,u) du ) lambda(s, T) ds ).

Both integrals are composite trapezoid rules on the grid nodes. They are
written as running sums of nonnegative (inner) or monotone (outer) terms,
and J' is taken from ``jprime_ordered`` when the exponent has it, so A is
order-preserving in floating point too: h1 <= h2 node-wise gives
A h1 <= A h2 node-wise without any tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .curves import on_grid
from .levy_path import TriangularGrid

E2 = math.e**2

CONVERGED = "Converged"
DIVERGED = "Diverged"
STALLED = "Stalled"


def _jp_fn(jp):
    for name in ("jprime_ordered", "jprime"):
        if hasattr(jp, name):
            return getattr(jp, name)
    return jp


@dataclass
class ForwardField:
    grid: TriangularGrid
    values: np.ndarray  # (n+1, n+1), zero below the diagonal

    @property
    def finite(self):
        return np.isfinite(self.values) & self.grid.mask

    def sup(self):
        return float(self.values[self.grid.mask].max())


@dataclass
class SolveOutcome:
    status: str
    iterations: int
    residual: float
    field: ForwardField
    residual_history: list
    iterates: list = field(default_factory=list)
    blowup_node: tuple | None = None  # (i, j) of the largest node when Diverged
    bound_c: float | None = None


def inner_integrals(h, lam_grid, grid):
    """Z[k, j] = trapezoid of lambda(t_k, u) h(t_k, u) over u in [t_k, T_j]."""
    n1 = grid.n + 1
    g = np.where(grid.mask, lam_grid * h, 0.0)
    z = np.zeros((n1, n1))
    d = grid.delta
    for k in range(n1):
        row = g[k, k:]
        if len(row) > 1:
            z[k, k:] = _prefix_half(row, d)
    return z


def _prefix_half(row, d):
    out = np.empty_like(row)
    out[0] = 0.0
    # running sum of row[0]/2 + row[1] + ... + row[m-1], then + row[m]/2
    p = 0.5 * row[0]
    for_cum = np.concatenate([[p], row[1:-1]])
    prefix = np.cumsum(for_cum)
    out[1:] = d * (prefix + 0.5 * row[1:])
    return out


def apply_A(h, a_values, lam_grid, jp, grid: TriangularGrid):
    """One application of A; overflowing nodes come back as +inf."""
    jprime = _jp_fn(jp)
    z = inner_integrals(h, lam_grid, grid)
    mask = grid.mask
    with np.errstate(over="ignore", invalid="ignore"):
        e = np.zeros_like(z)
        e[mask] = np.asarray(jprime(z[mask]), float) * lam_grid[mask]
        # outer trapezoid over s = t_0..t_i for each column j
        n1 = grid.n + 1
        s = np.zeros((n1, n1))
        for j in range(n1):
            col = e[: j + 1, j]
            if len(col) > 1:
                s[: j + 1, j] = _prefix_half(col, grid.delta)
        out = np.where(mask, a_values * np.exp(s), 0.0)
    out[mask & ~np.isfinite(out)] = np.inf
    return out


def solve_fixed_point(a_values, lam_grid, jp, grid: TriangularGrid, tol=1e-9, max_iters=500,
                      blowup_threshold=1e12, h0=None, keep_iterates=False) -> SolveOutcome:
    """Picard iteration h_{n+1} = A h_n from h0 (default 0)."""
    mask = grid.mask
    h = np.zeros((grid.n + 1, grid.n + 1)) if h0 is None else np.where(mask, np.asarray(h0, float), 0.0)
    iterates = [h] if keep_iterates else []
    history = []
    for it in range(1, max_iters + 1):
        new = apply_A(h, a_values, lam_grid, jp, grid)
        if keep_iterates:
            iterates.append(new)
        bad = mask & (~np.isfinite(new) | (new > blowup_threshold))
        if bad.any():
            vals = np.where(bad, np.nan_to_num(new, posinf=np.inf), -np.inf)
            node = tuple(int(v) for v in np.unravel_index(np.argmax(vals), vals.shape))
            history.append(math.inf)
            return SolveOutcome(DIVERGED, it, math.inf, ForwardField(grid, new), history, iterates, node)
        res = float(np.max(np.abs(new - h)[mask]))
        history.append(res)
        h = new
        if res < tol:
            return SolveOutcome(CONVERGED, it, res, ForwardField(grid, h), history, iterates)
    return SolveOutcome(STALLED, max_iters, history[-1], ForwardField(grid, h), history, iterates)


def bound_constant_c(K, jp, lambda_bar, t_star, c_max=1e30, grid_points=2000, bisect_steps=80):
    """Smallest c in [K, c_max] with ln K + lambda_bar T* max(J'(lambda_bar c T*), 0) <= ln c, or None."""
    jprime = _jp_fn(jp)
    if not K > 0:
        raise ValueError("K must be positive")

    def ok(c):
        with np.errstate(over="ignore", invalid="ignore"):
            v = float(jprime(np.array(lambda_bar * c * t_star)))
        return math.isfinite(v) and math.log(K) + lambda_bar * t_star * max(v, 0.0) <= math.log(c)

    if ok(K):
        return float(K)
    if c_max <= K:
        return None
    cs = np.geomspace(K, c_max, grid_points)
    prev = K
    for c in cs[1:]:
        if ok(c):
            lo, hi = math.log(prev), math.log(c)
            for _ in range(bisect_steps):
                mid = 0.5 * (lo + hi)
                if ok(math.exp(mid)):
                    hi = mid
                else:
                    lo = mid
            return math.exp(hi)
        prev = c
    return None


def a_sup(a_values, grid):
    return float(a_values[grid.mask].max())


# ---------------------------------------------------------------------------
# Minorant machinery
# ---------------------------------------------------------------------------


def minorant_h(x, y, t, T):
    """h(t, T) = exp(1 / (x - t + y - T)), +inf at (x, y)."""
    t = np.asarray(t, float)
    T = np.asarray(T, float)
    d = x - t + y - T
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(d > 0, np.exp(1.0 / np.where(d > 0, d, 1.0)), np.inf)


def R(z, alpha, gamma):
    """R(z) = alpha ln^3(gamma (z + e^2))."""
    return alpha * np.log(gamma * (np.asarray(z, float) + E2)) ** 3


def R_lipschitz_constant(alpha, gamma):
    return 3 * alpha * (2 + math.log(gamma)) ** 2 / E2


@dataclass(frozen=True)
class MinorantParams:
    alpha: float
    gamma: float
    x: float
    y: float
    t_star: float = 1.0

    def __post_init__(self):
        a, g, x, y, ts = self.alpha, self.gamma, self.x, self.y, self.t_star
        checks = [
            (a > 0, "alpha > 0"),
            (g >= 1, "gamma >= 1"),
            (a * g > 2, "alpha gamma > 2"),
            (g * ts > 1, "gamma T* > 1"),
            (0 < x < y < min(a / 2, ts), "0 < x < y < min(alpha/2, T*)"),
            (g * (y - x) > 1, "gamma (y - x) > 1"),
        ]
        failed = [msg for good, msg in checks if not good]
        if failed:
            raise ValueError("minorant parameters outside the admissible regime: " + ", ".join(failed))

    def in_region(self, t, T, delta=0.0):
        """Nodes of {0 <= t <= x, t <= T <= y - delta}."""
        t = np.asarray(t, float)
        T = np.asarray(T, float)
        return (t <= self.x) & (T <= self.y - delta) & (t <= T)


def _log_inner(p: MinorantParams, s, T):
    """ln int_s^T h(s, u) du, via u = T - w and 1/(D+w) = 1/D - w/(D(D+w))."""
    d = p.x - s + p.y - T
    if T <= s:
        return -math.inf
    top = T - s
    # the integrand falls off on the scale w ~ d^2
    cuts = [0.0] + [c * d * d for c in (1.0, 10.0, 100.0) if c * d * d < top] + [top]
    val = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        val += integrate.quad(lambda w: math.exp(-w / (d * (d + w))), a, b, epsabs=1e-13 * val,
                              epsrel=1e-10, limit=200)[0]
    return 1.0 / d + math.log(val)


def _R_from_log(p: MinorantParams, log_z):
    return p.alpha * (math.log(p.gamma) + np.logaddexp(log_z, 2.0)) ** 3


def g_value(p: MinorantParams, t, T):
    """g(t, T) by adaptive quadrature (0 at (x, y))."""
    if not (0 <= t <= p.x and t <= T <= p.y):
        raise ValueError("(t, T) outside the region t <= x, T <= y")
    if t == p.x and T == p.y:
        return 0.0
    outer = integrate.quad(lambda s: _R_from_log(p, _log_inner(p, s, T)), 0.0, t, epsabs=0.0, epsrel=1e-10,
                           limit=200)[0] if t > 0 else 0.0
    return math.exp(1.0 / (p.x - t + p.y - T) - outer)


def g_field(p: MinorantParams, grid: TriangularGrid):
    """g on grid nodes of the region by nested trapezoid; nan elsewhere."""
    t = grid.t
    n1 = grid.n + 1
    region = p.in_region(t[:, None], t[None, :]) & ~((t[:, None] == p.x) & (t[None, :] == p.y))
    h = np.where(region, minorant_h(p.x, p.y, t[:, None], t[None, :]), 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        z = inner_integrals(h, np.ones((n1, n1)), grid)
        r = np.where(region, R(z, p.alpha, p.gamma), 0.0)
        s = np.zeros((n1, n1))
        for j in range(n1):
            col = r[: j + 1, j]
            if len(col) > 1:
                s[: j + 1, j] = _prefix_half(col, grid.delta)
        out = np.where(region, h * np.exp(-s), np.nan)
    out[(t[:, None] == p.x) & (t[None, :] == p.y)] = 0.0
    return out


def jensen_check(values):
    """ln^3(mean + e^2) >= mean of ln^3(v + e^2) for positive samples."""
    v = np.asarray(values, float)
    lhs = math.log(float(v.mean()) + E2) ** 3
    rhs = float(np.mean(np.log(v + E2) ** 3))
    return lhs >= rhs - 1e-12 * abs(lhs), lhs, rhs


@dataclass
class DominanceReport:
    hypothesis_ok: bool
    hypothesis_min_margin: float  # min over region nodes of e^{beta t} a - g
    nodes_checked: int
    fraction_satisfied: list  # per checked iterate
    max_violation: list  # per checked iterate, max of h - f (<= 0 when dominated)
    verdict: bool | None  # None when the hypothesis fails


def verify_minorant_dominance(iterates, a_values, grid: TriangularGrid, p: MinorantParams, beta: float,
                              delta: float, late: int = 3) -> DominanceReport:
    """Check f_n >= h on the grid part of {t <= x, T <= y - delta} for the last `late` iterates.

    ``iterates`` starts with the initial guess h_0, which is not checked.
    """
    t = grid.t
    tt, TT = t[:, None], t[None, :]
    g = g_field(p, grid)
    reg = p.in_region(tt, TT)
    margin = (np.exp(beta * tt) * a_values - g)[reg]
    hyp = bool(np.all(margin >= 0))
    zone = p.in_region(tt, TT, delta) & grid.mask
    hz = minorant_h(p.x, p.y, tt, TT)[zone]
    if not hyp:
        return DominanceReport(False, float(margin.min()), int(zone.sum()), [], [], None)
    fracs, viol = [], []
    for f in iterates[1:][-late:]:
        fz = np.asarray(f)[zone]
        with np.errstate(invalid="ignore"):
            diff = hz - fz
        fracs.append(float(np.mean(fz >= hz)))
        viol.append(float(np.max(diff)))
    return DominanceReport(True, float(margin.min()), int(zone.sum()), fracs, viol, all(fr == 1.0 for fr in fracs))
