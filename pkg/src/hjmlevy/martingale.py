"""HJM drift check and Monte Carlo test of discounted bond prices.

P(t, T) = exp(-int_t^T f(t, u) du) and P^(t, T) = exp(-int_0^t f(s, s) ds) P(t, T).
P^ is computed as one trapezoid over u in [0, T] of the curve that equals
f(u, u) for u < t and f(t, u) for u >= t (the flat extension of f below the
diagonal), so a static field gives P^(t, T) = P(0, T) bit for bit.

The martingale surrogate: for fixed (t, T) the Monte Carlo mean of P^(t, T)
must match P(0, T) within 3 standard errors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .curves import on_grid
from .field_solver import CONVERGED, DIVERGED, inner_integrals, solve_fixed_point
from .laplace_exponent import LaplaceExponent
from .levy_path import TriangularGrid, a_field, simulate_path, truncation_bound


def _trapezoid(values, delta):
    v = np.asarray(values, float)
    if len(v) < 2:
        return 0.0
    return float(delta * (0.5 * v[0] + np.sum(v[1:-1]) + 0.5 * v[-1]))


def drift_consistency(values, lam_grid, exponent, grid: TriangularGrid):
    """max over nodes of |int_t^T alpha(t, u) du - J(int_t^T sigma(t, u) du)|.

    sigma = lambda f and alpha(t, u) = J'(int_t^u sigma) sigma(t, u).
    """
    sigma = np.where(grid.mask, lam_grid * values, 0.0)
    big_sigma = inner_integrals(values, lam_grid, grid)
    mask = grid.mask
    alpha = np.zeros_like(sigma)
    alpha[mask] = np.asarray(exponent.jprime(big_sigma[mask]), float) * sigma[mask]
    lhs = inner_integrals(alpha, np.ones_like(alpha), grid)
    rhs = np.zeros_like(sigma)
    rhs[mask] = np.asarray(exponent.J(big_sigma[mask]), float)
    return float(np.max(np.abs(lhs - rhs)[mask]))


def _check_range(values, pieces):
    if not np.all(np.isfinite(pieces)):
        raise ValueError("infinite forward rate inside the integration range")


def bond_price(values, grid: TriangularGrid, i, j):
    """P(t_i, T_j)."""
    row = np.asarray(values)[i, i : j + 1]
    _check_range(values, row)
    return math.exp(-_trapezoid(row, grid.delta))


def discounted_curve(values, i, j):
    """f(u, u) for u < t_i, f(t_i, u) for t_i <= u <= T_j, on grid nodes."""
    v = np.asarray(values)
    diag = np.diagonal(v)[:i]
    return np.concatenate([diag, v[i, i : j + 1]])


def discounted_bond(values, grid: TriangularGrid, i, j):
    """P^(t_i, T_j)."""
    curve = discounted_curve(values, i, j)
    _check_range(values, curve)
    return math.exp(-_trapezoid(curve, grid.delta))


class MartingaleAbort(RuntimeError):
    def __init__(self, message, seed, path_index):
        super().__init__(message)
        self.seed = seed
        self.path_index = path_index


@dataclass
class MartingaleReport:
    t: np.ndarray
    T: np.ndarray
    p0: np.ndarray  # P(0, T) per checked node
    mean: np.ndarray
    se: np.ndarray
    z: np.ndarray
    passed: bool
    in_band_fraction: float
    structural_failure: bool  # fewer than 95% of nodes within 3 SE
    n_paths: int
    seed: int
    bias: dict = field(default_factory=dict)
    samples: np.ndarray | None = None  # (n_paths, nodes) of P^ - P(0, T)

    def summary(self):
        worst = float(np.max(np.abs(self.z))) if len(self.z) else 0.0
        state = "PASS" if self.passed else "FAIL"
        return (f"{state}: {len(self.z)} nodes, {self.n_paths} paths, seed {self.seed}, max |z| = {worst:.3f}, "
                f"in-band {100 * self.in_band_fraction:.1f}%")

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "T", "mean", "se", "z"])
        for row in zip(self.t, self.T, self.mean, self.se, self.z):
            w.writerow([repr(float(v)) for v in row])


def _stats(diffs):
    """Mean, SE and z of per-path deviations from P(0, T); z = 0 when both are 0."""
    n = diffs.shape[0]
    mean = diffs.mean(axis=0)
    se = diffs.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(diffs.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, mean / np.where(se > 0, se, 1.0), np.where(mean == 0, 0.0, np.sign(mean) * np.inf))
    return mean, se, z


def se_scaling(report: MartingaleReport, sizes):
    """SE (averaged over nodes with nonzero SE) for path-count prefixes, and the log-log slope."""
    if report.samples is None:
        raise ValueError("report was built without samples")
    ses = []
    for n in sizes:
        _, se, _ = _stats(report.samples[:n])
        live = se > 0
        ses.append(float(np.mean(se[live])) if live.any() else 0.0)
    slope = float(np.polyfit(np.log(sizes), np.log(ses), 1)[0])
    return ses, slope


def martingale_test(model, lam, f0, grid: TriangularGrid, maturities, n_paths, seed, epsilon_cut=0.0,
                    exponent=None, tol=1e-12, max_iters=500, blowup_threshold=1e12, keep_samples=True):
    """Monte Carlo check that the mean of P^(t, T) stays at P(0, T) for each maturity T.

    ``maturities`` are grid indices j. ``exponent`` overrides the model's own
    (the negative control passes a scaled exponent here).
    """
    exp_model = LaplaceExponent(model)
    exp = exponent if exponent is not None else exp_model
    lam_grid = on_grid(lam, grid)
    nodes = [(i, j) for j in maturities for i in range(j + 1)]
    t_nodes = grid.t
    diffs = np.empty((n_paths, len(nodes)))

    first = None
    trunc = 0.0
    for k in range(n_paths):
        path = simulate_path(model, seed, epsilon_cut, grid.t_star, path_index=k)
        af = a_field(path, lam, f0, grid)
        out = solve_fixed_point(af.values, lam_grid, exp, grid, tol=tol, max_iters=max_iters,
                                blowup_threshold=blowup_threshold)
        if out.status == DIVERGED:
            raise MartingaleAbort(f"path {k} diverged at node {out.blowup_node}", seed, k)
        if out.status != CONVERGED:
            raise MartingaleAbort(f"path {k} stalled (residual {out.residual:.3g})", seed, k)
        f = out.field.values
        if first is None:
            # the t = 0 row is deterministic, so P(0, T) comes from the same arithmetic as P^
            first = f
            p0 = np.array([discounted_bond(f, grid, 0, j) for _, j in nodes])
            trunc = truncation_bound(path, lam.bounds(grid.t_star)[1])
        for col, (i, j) in enumerate(nodes):
            diffs[k, col] = discounted_bond(f, grid, i, j) - p0[col]

    mean_d, se, z = _stats(diffs)
    in_band = float(np.mean(np.abs(z) <= 3.0))
    bias = {
        "truncation_log_scale": trunc,
        "drift_residual_first_path": drift_consistency(first, lam_grid, exp_model, grid),
        "grid_step": grid.delta,
    }
    return MartingaleReport(
        t=np.array([t_nodes[i] for i, _ in nodes]),
        T=np.array([t_nodes[j] for _, j in nodes]),
        p0=p0,
        mean=p0 + mean_d,
        se=se,
        z=z,
        passed=bool(np.all(np.abs(z) <= 3.0)),
        in_band_fraction=in_band,
        structural_failure=in_band < 0.95,
        n_paths=n_paths,
        seed=seed,
        bias=bias,
        samples=diffs if keep_samples else None,
    )
