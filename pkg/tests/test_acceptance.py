"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""

import math

import numpy as np
from hjmlevy.curves import ConstantVolatility, InitialCurve, on_grid
from hjmlevy.existence_classifier import EXISTS, NOT_EXISTS, classify, estimate_rho
from hjmlevy.field_solver import (
    CONVERGED,
    DIVERGED,
    R,
    MinorantParams,
    R_lipschitz_constant,
    a_sup,
    bound_constant_c,
    g_value,
    solve_fixed_point,
    verify_minorant_dominance,
)
from hjmlevy.laplace_exponent import LaplaceExponent, cube_log_exponent, scaled_exponent
from hjmlevy.levy_model import (
    FiniteAtomList,
    LevyModel,
    LogModified,
    TruncatedStable,
    UniformDensity,
    ZeroMeasure,
)
from hjmlevy.levy_path import TriangularGrid, a_field, simulate_path
from hjmlevy.martingale import martingale_test

CP_MODEL = LevyModel(drift=1.0, measure=UniformDensity(2.0, 0.0, 1.0))
# no drift, so J' > 0 and the bound c sits strictly above sup a
CP_SOLVE = LevyModel(drift=0.0, measure=UniformDensity(3.0, 0.0, 1.0))


def test_criterion_1_verdicts(criterion):
    cases = [
        ("TS p=0.5", LevyModel(measure=TruncatedStable(0.5)), 1.0, EXISTS),
        ("TS p=1, lambda_bar T*=0.5", LevyModel(measure=TruncatedStable(1.0)), 0.5, EXISTS),
        ("compound-Poisson subordinator", LevyModel(drift=1.0, measure=FiniteAtomList((0.1, 0.5), (2.0, 1.0))), 1.0,
         EXISTS),
        ("LogModified gamma=0.5", LevyModel(measure=LogModified(0.5)), 1.0, EXISTS),
        ("LogModified gamma=2", LevyModel(measure=LogModified(2.0)), 1.0, EXISTS),
        ("TS p=1.5", LevyModel(measure=TruncatedStable(1.5)), 1.0, NOT_EXISTS),
        ("q=0.5", LevyModel(gaussian_q=0.5, measure=TruncatedStable(0.5)), 1.0, NOT_EXISTS),
        ("negative jumps", LevyModel(measure=FiniteAtomList((-0.3, 0.2), (1.0, 1.0))), 1.0, NOT_EXISTS),
    ]
    with criterion(1, "existence verdicts", 10.0) as c:
        for name, model, lam, expected in cases:
            got = classify(model, (lam, lam), 1.0).verdict
            c.check(got == expected, f"{name}: {got}")


def test_criterion_2_tauber_index(criterion):
    x_grid = np.geomspace(1e-1, 1e-6, 26)
    with criterion(2, "Tauber index estimate", 1.0) as c:
        for p in (0.3, 0.7, 1.3, 1.7):
            rho = estimate_rho(LevyModel(measure=TruncatedStable(p)), x_grid).rho_hat
            c.check(abs(rho - (2 - p)) <= 0.02, f"p={p}: rho_hat={rho:.4f}")
            c.note(f"p={p}: {rho:.4f}")


def test_criterion_3_drift_only(criterion):
    grid = TriangularGrid(100, 1.0)
    model = LevyModel(drift=0.8)
    lam = ConstantVolatility(0.7)
    f0 = InitialCurve.affine(0.03, 0.01)
    with criterion(3, "drift-only field equals f0", 5.0) as c:
        path = simulate_path(model, 0, 0.0)
        af = a_field(path, lam, f0, grid)
        out = solve_fixed_point(af.values, on_grid(lam, grid), LaplaceExponent(model), grid, tol=1e-13)
        target = np.broadcast_to(f0(grid.t)[None, :], af.values.shape)
        err = float(np.max(np.abs(out.field.values - target)[grid.mask]))
        c.check(out.status == CONVERGED, f"status {out.status}")
        c.check(err <= 1e-10, f"max error {err:.2e}")


def _cp_run(seed, grid, lam, f0, tol, h0=None, keep=False):
    path = simulate_path(CP_SOLVE, seed, 0.0, grid.t_star)
    af = a_field(path, lam, f0, grid)
    exp = LaplaceExponent(CP_SOLVE)
    out = solve_fixed_point(af.values, on_grid(lam, grid), exp, grid, tol=tol, h0=h0, keep_iterates=keep)
    c = bound_constant_c(a_sup(af.values, grid), exp, lam.bounds(grid.t_star)[1], grid.t_star)
    return af, out, c


def test_criterion_4_monotone_and_bounded(criterion):
    grid = TriangularGrid(20, 1.0)
    lam = ConstantVolatility(1.0)
    f0 = InitialCurve.constant(1.0)
    with criterion(4, "monotone iterates and field <= c on 50 seeds", 60.0) as c:
        bad_mono, bad_bound, bad_status = [], [], []
        for seed in range(50):
            _, out, bound = _cp_run(seed, grid, lam, f0, 1e-12, keep=True)
            its = out.iterates
            if not all(np.all(b[grid.mask] >= a[grid.mask]) for a, b in zip(its, its[1:])):
                bad_mono.append(seed)
            if out.status != CONVERGED:
                bad_status.append(seed)
            if bound is None or not np.all(out.field.values[grid.mask] <= bound):
                bad_bound.append(seed)
        c.check(not bad_status, f"not converged: {bad_status}")
        c.check(not bad_mono, f"non-monotone seeds: {bad_mono}")
        c.check(not bad_bound, f"seeds above c: {bad_bound}")


def test_criterion_5_uniqueness(criterion):
    grid = TriangularGrid(20, 1.0)
    lam = ConstantVolatility(1.0)
    f0 = InitialCurve.constant(1.0)
    tol = 1e-12
    with criterion(5, "iterations from 0 and from c agree", 30.0) as c:
        worst = 0.0
        for seed in range(10):
            _, low, bound = _cp_run(seed, grid, lam, f0, tol)
            _, high, _ = _cp_run(seed, grid, lam, f0, tol, h0=np.full((grid.n + 1, grid.n + 1), bound))
            c.check(low.status == CONVERGED and high.status == CONVERGED, f"seed {seed} statuses")
            worst = max(worst, float(np.max(np.abs(low.field.values - high.field.values)[grid.mask])))
        c.check(worst <= 10 * tol, f"max gap {worst:.2e}")


def test_criterion_6_blowup(criterion):
    grid = TriangularGrid(100, 1.0)
    params = MinorantParams(alpha=4.0, gamma=2.0, x=0.2, y=0.9)
    exp = cube_log_exponent(4.0, 2.0, -10.0)
    lam = ConstantVolatility(1.0)
    f0 = InitialCurve.constant(1e6)
    with criterion(6, "cube-log blow-up and minorant dominance", 60.0) as c:
        af = a_field(simulate_path(LevyModel(), 0, 0.0), lam, f0, grid)
        out = solve_fixed_point(af.values, on_grid(lam, grid), exp, grid, keep_iterates=True)
        c.check(out.status == DIVERGED, f"status {out.status}")
        rep = verify_minorant_dominance(out.iterates, af.values, grid, params, beta=-10.0, delta=0.1)
        c.check(rep.hypothesis_ok, f"hypothesis margin {rep.hypothesis_min_margin:.3g}")
        c.check(rep.verdict is True, f"dominance fractions {rep.fraction_satisfied} on {rep.nodes_checked} nodes")
        c.note(f"diverged at iteration {out.iterations}, {rep.nodes_checked} nodes dominated")


def test_criterion_7_lipschitz_and_g(criterion):
    alpha, gamma = 4.0, 2.0
    d = R_lipschitz_constant(alpha, gamma)
    rng = np.random.default_rng(7)
    with criterion(7, "R Lipschitz bound and g -> 0", 5.0) as c:
        c.check(math.isclose(d, 3 * alpha * (2 + math.log(gamma)) ** 2 / math.e**2), f"d={d}")
        z1 = 10.0 ** rng.uniform(-6, 6, 1000)
        z2 = 10.0 ** rng.uniform(-6, 6, 1000)
        lhs = np.abs(R(z1, alpha, gamma) - R(z2, alpha, gamma))
        viol = float(np.max(lhs - d * np.abs(z1 - z2)))
        c.check(viol <= 1e-12, f"max excess {viol:.2e}")
        p = MinorantParams(alpha, gamma, 0.2, 0.9)
        vals = [g_value(p, p.x * (1 - 2.0**-k), p.y - 2.0**-k / 2) for k in range(2, 8)]
        c.check(min(vals) < 1e-3, f"g along approach: {[f'{v:.2e}' for v in vals]}")


def test_criterion_8_martingale(criterion):
    grid = TriangularGrid(10, 1.0)
    lam = ConstantVolatility(0.2)
    f0 = InitialCurve.constant(0.03)
    mats = [5, 10]
    with criterion(8, "martingale null run, 1e4-path run and doubled control", 600.0) as c:
        null = martingale_test(LevyModel(drift=0.3, measure=ZeroMeasure()), lam, f0, grid, mats, 200, 3)
        c.check(np.all(null.z == 0.0), f"null run max |z| {np.max(np.abs(null.z))}")
        rep = martingale_test(CP_MODEL, lam, f0, grid, mats, 10_000, 11, keep_samples=False)
        c.check(rep.passed, f"1e4 paths: {rep.summary()}")
        c.note(f"1e4 paths max |z| {np.max(np.abs(rep.z)):.2f}")
        ctrl = martingale_test(CP_MODEL, lam, f0, grid, mats, 1000, 11,
                               exponent=scaled_exponent(LaplaceExponent(CP_MODEL), 2.0), keep_samples=False)
        c.check(not ctrl.passed, f"doubled control: {ctrl.summary()}")
        c.note(f"control max |z| {np.max(np.abs(ctrl.z)):.1f}")


def test_criterion_9_exponent_accuracy(criterion):
    models = {
        "TS p=0.5": LevyModel(measure=TruncatedStable(0.5)),
        "TS p=1": LevyModel(measure=TruncatedStable(1.0)),
        "TS p=1.5": LevyModel(drift=0.3, measure=TruncatedStable(1.5)),
        "Uniform": LevyModel(drift=-0.2, measure=UniformDensity(1.0, -0.5, 3.0)),
        "atoms": LevyModel(drift=1.0, measure=FiniteAtomList((0.1, 0.5, 2.0), (2.0, 1.0, 0.3))),
    }
    # h = 1e-4 z is a relative step, so the central difference carries about (h J3/J2)^2 / 6
    # of truncation error (J3 the third derivative); above z ~ 1e2 that exceeds 1e-4 when J' grows
    # exponentially, so the derivative checks use z up to 1e2
    z = np.geomspace(1e-3, 1e2, 100)
    with criterion(9, "J' monotone, J'' >= 0, derivative and quadrature agreement", 5.0) as c:
        for name, model in models.items():
            e = LaplaceExponent(model)
            jp = e.jprime(z)
            c.check(np.all(np.diff(jp) >= 0), f"{name}: J' decreases")
            c.check(np.all(e.jsecond(z) >= 0), f"{name}: J'' < 0")
            h = 1e-4 * z
            fd = (e.jprime(z + h) - e.jprime(z - h)) / (2 * h)
            rel = float(np.max(np.abs(fd - e.jsecond(z)) / np.abs(e.jsecond(z))))
            c.check(rel <= 1e-4, f"{name}: finite difference rel err {rel:.2e}")
            zq = np.geomspace(1e-3, 1e3, 13)
            closed = e.jprime(zq)
            for label, quad in (("split", LaplaceExponent(model, method="quad").jprime(zq)),
                                ("direct", np.array([e.jprime_direct(v) for v in zq]))):
                err = float(np.max(np.abs(quad - closed) / np.maximum(1.0, np.abs(closed))))
                c.check(err <= 1e-8, f"{name}: closed vs {label} quadrature {err:.2e}")
