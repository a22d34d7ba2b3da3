"""J' on fixed quadrature nodes, nondecreasing in z in floating point.

The measure part of J' is a sum of w_k phi(z, y_k) with weights w_k >= 0 and
phi increasing in z for every y. With the nodes, weights and summation
order fixed, each floating-point operation is monotone, so the computed
value never decreases when z increases. Closed forms do not have this
property (they wobble by an ulp), and the solver needs it to keep its
iterates exactly monotone.

Nodes: 16-point Gauss-Legendre panels in s = -ln|y| for |y| < 1 and in
u = ln|y| for |y| >= 1, refined geometrically towards the end of each piece
where exp(-z y) concentrates for large z. Mass below |y| = e^{-S_MAX} enters
through its linear term z int y^2 nu, which is exact up to z^2 e^{-S_MAX}.
"""

from __future__ import annotations

import math

import numpy as np

from .levy_model import FiniteAtomList

S_MAX = 45.0
Y_MAX = 1e8
PANEL = 1.5
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _edges(a, b, refine=None):
    """Panels of width <= PANEL on [a, b], geometrically refined towards a or b down to 1e-10."""
    if not b > a:
        return np.array([a])
    span = b - a
    uniform = np.linspace(a, b, max(1, int(math.ceil(span / PANEL))) + 1)
    if refine is None:
        return uniform
    fine = np.geomspace(1e-10, min(span, PANEL) / 2, 24)
    return np.unique(np.concatenate([uniform, a + fine if refine == "lo" else b - fine]))


def _gl(edges):
    lo, hi = edges[:-1, None], edges[1:, None]
    x = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * _GL_W
    return x.ravel(), w.ravel()


class OrderedJprime:
    """Measure part of J' for a measure with a density, or a finite atom list."""

    def __init__(self, nu):
        self.nu = nu
        if isinstance(nu, FiniteAtomList):
            # the closed form is already a fixed-order sum of monotone terms
            self._atoms = True
            return
        self._atoms = False
        if not math.isfinite(nu.lower):
            raise ValueError("ordered J' needs a support bounded below")
        near_y, near_w, far_y, far_w = [], [], [], []
        self.tail_sq = 0.0  # int y^2 nu over 0 < |y| < e^{-S_MAX}
        self.tail_far = 0.0  # int y nu over y > Y_MAX
        lo, hi = nu.lower, nu.upper
        for side in (-1.0, 1.0):
            a_abs, b_abs = (max(0.0, -min(hi, 0.0)), min(1.0, -lo)) if side < 0 else (max(0.0, lo), min(1.0, hi))
            if not b_abs > a_abs:
                continue
            s_a = -math.log(b_abs)
            s_b = min(S_MAX, -math.log(a_abs)) if a_abs > 0 else S_MAX
            # exp(z|y|) on the negative side peaks at the large-|y| end, i.e. small s
            s, w = _gl(_edges(s_a, s_b, "lo" if side < 0 else None))
            logd = np.array([nu._log_density_s(v, side) for v in s])
            near_y.append(side * np.exp(-s))
            near_w.append(w * np.exp(logd - s))
            if a_abs < math.exp(-S_MAX):
                cut = math.exp(-S_MAX)
                self.tail_sq += nu.moment(2, -cut, 0.0) if side < 0 else nu.moment(2, 0.0, cut)
        if hi > 1:
            top = min(hi, Y_MAX)
            u, w = _gl(_edges(0.0, math.log(top), "lo"))
            y = np.exp(u)
            far_y.append(y)
            far_w.append(w * y * np.array([nu.density(v) for v in y]))
            if hi > Y_MAX:
                self.tail_far = nu.moment(1, Y_MAX, math.inf)
        if lo < -1:
            u, w = _gl(_edges(0.0, math.log(-lo), "hi"))
            y = -np.exp(u)
            far_y.append(y)
            far_w.append(w * np.exp(u) * np.array([nu.density(v) for v in y]))
        cat = lambda parts: np.concatenate(parts) if parts else np.zeros(0)
        self.near_y, self.near_w = cat(near_y), cat(near_w)
        self.far_y, self.far_w = cat(far_y), cat(far_w)
        keep = self.near_w > 0
        self.near_y, self.near_w = self.near_y[keep], self.near_w[keep]
        keep = self.far_w > 0
        self.far_y, self.far_w = self.far_y[keep], self.far_w[keep]

    def __call__(self, z):
        z = np.asarray(z, float)
        if self._atoms:
            return self.nu._kernel_closed("Jp", z)
        flat = np.ascontiguousarray(z.reshape(-1, 1))
        with np.errstate(over="ignore", invalid="ignore"):
            near = (self.near_w * (-self.near_y * np.expm1(-flat * self.near_y))).sum(axis=1)
            far = (self.far_w * (-self.far_y * np.exp(-flat * self.far_y))).sum(axis=1)
            out = near + far + flat[:, 0] * self.tail_sq - self.tail_far * np.exp(-flat[:, 0] * Y_MAX)
        return out.reshape(z.shape)
