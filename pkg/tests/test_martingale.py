import io
import math

import numpy as np
import pytest

from hjmlevy.curves import ConstantVolatility, InitialCurve, on_grid
from hjmlevy.field_solver import solve_fixed_point
from hjmlevy.laplace_exponent import LaplaceExponent, constant_exponent, cube_log_exponent, scaled_exponent
from hjmlevy.levy_model import LevyModel, UniformDensity, ZeroMeasure
from hjmlevy.levy_path import TriangularGrid, a_field, simulate_path
from hjmlevy.martingale import (
    MartingaleAbort,
    bond_price,
    discounted_bond,
    drift_consistency,
    martingale_test,
    se_scaling,
)

CP = LevyModel(drift=1.0, measure=UniformDensity(2.0, 0.0, 1.0))
LAM = ConstantVolatility(0.2)
F0 = InitialCurve.constant(0.03)


def test_bond_prices_of_flat_field():
    g = TriangularGrid(10)
    f = np.where(g.mask, 0.05, 0.0)
    assert bond_price(f, g, 2, 7) == pytest.approx(math.exp(-0.05 * 0.5), rel=1e-14)
    assert discounted_bond(f, g, 4, 10) == pytest.approx(math.exp(-0.05), rel=1e-14)
    assert bond_price(f, g, 3, 3) == 1.0
    f[5, 6] = np.inf
    with pytest.raises(ValueError):
        bond_price(f, g, 5, 8)


def test_static_field_is_exact():
    g = TriangularGrid(10)
    f = np.where(g.mask, 0.03 + 0.01 * g.t[None, :], 0.0)
    for i in range(11):
        assert discounted_bond(f, g, i, 10) == discounted_bond(f, g, 0, 10)


def _solved(model, n, seed=0):
    g = TriangularGrid(n)
    lam = on_grid(LAM, g)
    af = a_field(simulate_path(model, seed, 0.0), LAM, F0, g)
    out = solve_fixed_point(af.values, lam, LaplaceExponent(model), g, tol=1e-14)
    return g, lam, out.field.values


def test_drift_consistency_constant_exponent():
    g = TriangularGrid(20)
    f = np.where(g.mask, 0.04, 0.0)
    lam = on_grid(LAM, g)
    # J' = c: both sides equal c times the sigma integral up to rounding
    assert drift_consistency(f, lam, constant_exponent(0.7), g) < 1e-15


def test_drift_consistency_levels():
    drift_only = LevyModel(drift=0.5, measure=ZeroMeasure())
    g, lam, f = _solved(drift_only, 20)
    assert drift_consistency(f, lam, LaplaceExponent(drift_only), g) <= 1e-12
    g, lam, f = _solved(CP, 100)
    e = LaplaceExponent(CP)
    scale = float(np.max(np.abs(e.J(np.array([0.2 * 0.03, 0.2 * 0.1])))))
    assert drift_consistency(f, lam, e, g) < 1e-3 * scale


def test_drift_consistency_shrinks_with_grid():
    res = []
    for n in (10, 20, 40):
        g, lam, f = _solved(CP, n)
        res.append(drift_consistency(f, lam, LaplaceExponent(CP), g))
    assert res[0] > res[1] > res[2]
    assert res[1] / res[2] > 3.0


def test_null_run_is_exact():
    g = TriangularGrid(10)
    rep = martingale_test(LevyModel(drift=0.4, measure=ZeroMeasure()), LAM, F0, g, [5, 10], 50, 0)
    assert np.all(rep.z == 0.0) and np.all(rep.se == 0.0) and rep.passed
    np.testing.assert_array_equal(rep.mean, rep.p0)


def test_compound_poisson_passes_and_control_fails():
    g = TriangularGrid(10)
    rep = martingale_test(CP, LAM, F0, g, [5, 10], 1000, 2)
    assert rep.passed and not rep.structural_failure
    assert rep.bias["truncation_log_scale"] == 0.0
    ses, slope = se_scaling(rep, [125, 250, 500, 1000])
    assert -0.7 < slope < -0.3
    ctrl = martingale_test(CP, LAM, F0, g, [5, 10], 1000, 2, exponent=scaled_exponent(LaplaceExponent(CP), 2.0))
    assert not ctrl.passed and ctrl.structural_failure


def test_abort_on_divergence():
    g = TriangularGrid(10)
    with pytest.raises(MartingaleAbort) as info:
        martingale_test(CP, ConstantVolatility(1.0), InitialCurve.constant(1e6), g, [10], 5, 9,
                        exponent=cube_log_exponent(4.0, 2.0, -10.0))
    assert info.value.seed == 9 and info.value.path_index == 0


def test_report_outputs():
    g = TriangularGrid(4)
    rep = martingale_test(CP, LAM, F0, g, [4], 20, 1)
    buf = io.StringIO()
    rep.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,T,mean,se,z" and len(lines) == 1 + 5
    assert rep.summary().startswith(("PASS", "FAIL"))
    with pytest.raises(ValueError):
        se_scaling(martingale_test(CP, LAM, F0, g, [4], 5, 1, keep_samples=False), [2, 5])


@pytest.mark.slow
def test_se_scaling_over_path_counts():
    g = TriangularGrid(10)
    rep = martingale_test(CP, LAM, F0, g, [5, 10], 16000, 4)
    ses, slope = se_scaling(rep, [1000, 4000, 16000])
    assert -0.6 <= slope <= -0.4, (ses, slope)
    assert rep.passed
