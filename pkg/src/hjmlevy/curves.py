"""Volatility surfaces lambda(t, T) and initial forward curves f0(T)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class ConstantVolatility:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("lambda must be positive")

    def __call__(self, t, T):
        return np.full(np.broadcast(np.asarray(t, float), np.asarray(T, float)).shape, self.value)

    def bounds(self, t_star=1.0):
        return self.value, self.value

    def a3_note(self):
        return "constant lambda: separable (one term), regularity assumption holds"

    @property
    def is_constant(self):
        return True


@dataclass(frozen=True)
class SeparableVolatility:
    """lambda(t, T) = sum_n a_n(t) b_n(T) with callables a_n, b_n."""

    terms: Sequence[tuple[Callable, Callable]]
    n_bound_samples: int = 401

    def __call__(self, t, T):
        t = np.asarray(t, float)
        T = np.asarray(T, float)
        return sum(np.asarray(a(t), float) * np.asarray(b(T), float) for a, b in self.terms)

    def bounds(self, t_star=1.0):
        """Sampled (min, max) over the triangle 0 <= t <= T <= t_star."""
        s = np.linspace(0.0, t_star, self.n_bound_samples)
        tt, TT = np.meshgrid(s, s, indexing="ij")
        vals = self(tt, TT)[tt <= TT]
        return float(vals.min()), float(vals.max())

    def a3_note(self):
        return f"separable lambda with {len(self.terms)} term(s): regularity assumption holds"

    @property
    def is_constant(self):
        return False


def on_grid(lam, grid):
    """lambda at all (t_i, T_j) nodes of a triangular grid as an (n+1, n+1) array."""
    return np.asarray(lam(grid.t[:, None], grid.t[None, :]), float)


@dataclass(frozen=True)
class InitialCurve:
    """f0 as constant, affine (level + slope T) or piecewise-linear samples."""

    kind: str
    level: float = 0.0
    slope: float = 0.0
    knots: tuple = ()
    values: tuple = ()
    continuous = True

    @classmethod
    def constant(cls, level):
        return cls("constant", level=float(level))

    @classmethod
    def affine(cls, level, slope):
        return cls("affine", level=float(level), slope=float(slope))

    @classmethod
    def samples(cls, knots, values):
        knots = tuple(float(k) for k in knots)
        if len(knots) < 2 or any(b <= a for a, b in zip(knots, knots[1:])):
            raise ValueError("sample knots must be strictly increasing with at least two points")
        if len(values) != len(knots):
            raise ValueError("knots and values differ in length")
        return cls("samples", knots=knots, values=tuple(float(v) for v in values))

    def __call__(self, T):
        T = np.asarray(T, float)
        if self.kind == "constant":
            return np.full(T.shape, self.level)
        if self.kind == "affine":
            return self.level + self.slope * T
        return np.interp(T, self.knots, self.values)


def volatility_from_config(block):
    if "constant" in block:
        return ConstantVolatility(float(block["constant"]))
    terms = []
    for term in block.get("separable", []):
        at = np.polynomial.Polynomial(term.get("t_coeffs", [1.0]))
        bT = np.polynomial.Polynomial(term.get("T_coeffs", [1.0]))
        terms.append((at, bT))
    if not terms:
        raise ValueError("lambda block needs 'constant' or 'separable'")
    return SeparableVolatility(tuple(terms))


def curve_from_config(block):
    kind = block.get("kind", "constant")
    if kind == "constant":
        return InitialCurve.constant(block.get("level", 0.03))
    if kind == "affine":
        return InitialCurve.affine(block.get("level", 0.03), block.get("slope", 0.0))
    if kind == "samples":
        return InitialCurve.samples(block["knots"], block["values"])
    raise ValueError(f"unknown f0 kind {kind!r}")
