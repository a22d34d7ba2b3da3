"""Simulated Lévy paths and the stochastic-exponential field a(t, T).

L(t) = slope * t + sum of jumps of size >= eps up to t, where
slope = a - int_eps^1 y nu(dy). Jumps below eps are compensated, so they are
replaced by their mean (zero); the recorded ``compensator_adjustment`` is
int_0^eps y nu(dy), the amount by which slope exceeds a - int_0^1 y nu(dy).

a(t, T) = f0(T) exp( slope int_0^t lambda(s, T) ds + sum_{tau <= t} ln(1 + lambda(tau, T) y) ).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .curves import on_grid
from .levy_model import AssumptionError, LevyModel, u_nu

NODE_SNAP = 1e-12


@dataclass(frozen=True)
class TriangularGrid:
    """Nodes (t_i, T_j) = (i delta, j delta), 0 <= i <= j <= n."""

    n: int
    t_star: float = 1.0

    def __post_init__(self):
        if self.n < 1 or not self.t_star > 0:
            raise ValueError("grid needs n >= 1 and t_star > 0")

    @property
    def delta(self):
        return self.t_star / self.n

    @property
    def t(self):
        return np.linspace(0.0, self.t_star, self.n + 1)

    @property
    def mask(self):
        """Boolean (n+1, n+1) array, True on the triangle j >= i."""
        idx = np.arange(self.n + 1)
        return idx[:, None] <= idx[None, :]

    def nodes(self):
        i, j = np.nonzero(self.mask)
        return i, j


def path_rng(seed, path_index=0):
    """Independent generator per (seed, path_index)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(path_index)]))


@dataclass(frozen=True)
class JumpPath:
    horizon: float
    drift: float
    slope: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    epsilon: float
    compensator_adjustment: float  # int_0^eps y nu, may be inf
    truncation_scale: float  # U(eps) = int_0^eps y^2 nu, variance of the dropped part per unit time

    def value(self, t):
        """L(t) for scalar or array t."""
        t = np.asarray(t, float)
        jumps = np.concatenate([[0.0], np.cumsum(self.jump_sizes)])
        return self.slope * t + jumps[np.searchsorted(self.jump_times, t, side="right")]

    def coarsen(self, model: LevyModel, eps: float) -> "JumpPath":
        """The same path with jumps below a larger cutoff eps compensated instead."""
        if eps < self.epsilon:
            raise ValueError("coarsen needs eps >= current cutoff")
        keep = self.jump_sizes >= eps
        return _build(model, self.horizon, self.jump_times[keep], self.jump_sizes[keep], eps)


def _small_first(nu, eps):
    return nu.moment(1, 0.0, eps) if eps > 0 else 0.0


def _build(model, horizon, times, sizes, eps):
    nu = model.measure
    lo = max(eps, nu.lower, 0.0)
    mid = nu.moment(1, lo, 1.0) if lo < 1.0 else 0.0
    u_eps = u_nu(model, eps) if eps > 0 else 0.0
    return JumpPath(horizon, model.drift, model.drift - mid, times, sizes, eps, _small_first(nu, eps), u_eps)


def path_from_jumps(model: LevyModel, times, sizes, t_star: float = 1.0, epsilon: float = 0.0) -> JumpPath:
    """A path with prescribed jumps (fixtures and replays)."""
    times = np.asarray(times, float)
    sizes = np.asarray(sizes, float)
    order = np.argsort(times, kind="stable")
    if len(times) != len(sizes) or np.any(sizes <= 0) or np.any((times <= 0) | (times > t_star)):
        raise ValueError("jumps need positive sizes and times in (0, t_star]")
    return _build(model, t_star, times[order], sizes[order], epsilon)


def simulate_path(model: LevyModel, seed: int, epsilon_cut: float, t_star: float = 1.0,
                  path_index: int = 0) -> JumpPath:
    """Compound-Poisson simulation of the jumps of size >= epsilon_cut."""
    nu = model.measure
    if model.gaussian_q > 0:
        raise AssumptionError("q > 0: no bounded solution exists, see classify()")
    if nu.lower < 0:
        raise AssumptionError("negative jumps: no bounded solution exists, see classify()")
    if epsilon_cut < 0:
        raise ValueError("epsilon_cut must be >= 0")
    rate = nu.tail_mass(epsilon_cut) if epsilon_cut > 0 else nu.mass(0.0, math.inf)
    if not math.isfinite(rate):
        raise ValueError("infinite jump intensity: choose epsilon_cut > 0")
    rng = path_rng(seed, path_index)
    count = rng.poisson(rate * t_star)
    times = np.sort(rng.uniform(0.0, t_star, count))
    sizes = np.asarray(nu.sample_sizes(rng, count, epsilon_cut), float)
    return _build(model, t_star, times, sizes, epsilon_cut)


@dataclass
class AField:
    grid: TriangularGrid
    values: np.ndarray  # (n+1, n+1); only j >= i is meaningful
    path: JumpPath

    @property
    def sup(self):
        return float(self.values[self.grid.mask].max())

    @property
    def inf(self):
        return float(self.values[self.grid.mask].min())


def _log_jump_terms(path, lam, grid):
    """(K, n+1) array of ln(1 + lambda(tau_k, T_j) y_k)."""
    if len(path.jump_times) == 0:
        return np.zeros((0, grid.n + 1))
    lam_j = np.asarray(lam(path.jump_times[:, None], grid.t[None, :]), float)
    arg = lam_j * path.jump_sizes[:, None]
    if np.any(arg <= -1.0):
        raise AssumptionError("1 + lambda * jump <= 0: support condition violated at runtime")
    return np.log1p(arg)


def a_field(path: JumpPath, lam, f0, grid: TriangularGrid) -> AField:
    lam_grid = on_grid(lam, grid)
    # cumulative trapezoid in s for every T column
    steps = 0.5 * grid.delta * (lam_grid[1:] + lam_grid[:-1])
    drift_int = np.vstack([np.zeros((1, grid.n + 1)), np.cumsum(steps, axis=0)])
    log_a = np.log(np.asarray(f0(grid.t), float))[None, :] + path.slope * drift_int

    terms = _log_jump_terms(path, lam, grid)
    if len(terms):
        # a jump within rounding of a node counts at that node
        first = np.searchsorted(grid.t, path.jump_times - NODE_SNAP * grid.t_star, side="left")
        inc = np.zeros((grid.n + 2, grid.n + 1))
        np.add.at(inc, first, terms)
        log_a = log_a + np.cumsum(inc, axis=0)[: grid.n + 1]
    values = np.exp(log_a)
    if not np.all(values[grid.mask] > 0):
        raise ArithmeticError("a-field lost positivity (underflow)")
    return AField(grid, values, path)


def a_field_product(path: JumpPath, lam_value: float, f0, grid: TriangularGrid) -> np.ndarray:
    """Closed form for constant lambda: f0(T) e^{lambda slope t} prod (1 + lambda y)."""
    t = grid.t
    out = np.empty((grid.n + 1, grid.n + 1))
    f = np.asarray(f0(t), float)
    for i, ti in enumerate(t):
        factors = 1.0 + lam_value * path.jump_sizes[path.jump_times <= ti + NODE_SNAP * grid.t_star]
        out[i] = f * math.exp(lam_value * path.slope * ti) * float(np.prod(factors))
    return out


def truncation_bound(path: JumpPath, lambda_bar: float) -> float:
    """Log-scale a-field error scale from compensating jumps below eps."""
    return path.compensator_adjustment * lambda_bar * path.horizon


def write_path_csv(path: JumpPath, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["time", "size"])
    for t, y in zip(path.jump_times, path.jump_sizes):
        w.writerow([repr(float(t)), repr(float(y))])


def write_field_csv(grid: TriangularGrid, values: np.ndarray, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "T", "value"])
    t = grid.t
    for i, j in zip(*grid.nodes()):
        w.writerow([repr(float(t[i])), repr(float(t[j])), repr(float(values[i, j]))])
