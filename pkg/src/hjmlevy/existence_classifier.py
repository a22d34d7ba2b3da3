"""Decision procedure: does a bounded forward-rate field exist for this model?

Rules run in a fixed priority order and every evaluated rule is recorded:

1. Gaussian part present (q > 0)                        -> NOT_EXISTS
2. negative jumps: nu((-1/lambda_bar, 0)) > 0            -> NOT_EXISTS
3. subordinator: support in [0, inf), int_0^1 y nu < inf -> EXISTS
4. Tauber index of U(x) = int_0^x y^2 nu near 0:
   rho > 1 + margin -> EXISTS, rho < 1 - margin -> NOT_EXISTS,
   rho ~ 1 with a density, M -> 0 and int M(x)/x dx = inf -> EXISTS
5. growth of J' at infinity: SUBLOG -> EXISTS, SUPERCUBELOG -> NOT_EXISTS

The first conclusive rule decides; if none is conclusive the verdict is
INCONCLUSIVE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import InitialCurve
from .laplace_exponent import SUBLOG, SUPERCUBELOG, GrowthOptions, LaplaceExponent, growth_classify
from .levy_model import AssumptionError, LevyModel, moment_integrals, u_nu, validate_assumptions

EXISTS = "EXISTS"
NOT_EXISTS = "NOT_EXISTS"
INCONCLUSIVE = "INCONCLUSIVE"

DEFAULT_X_GRID = tuple(np.geomspace(1e-1, 1e-6, 26))


@dataclass
class Evidence:
    rule: str
    basis: str
    conclusive: bool
    verdict: str | None
    diagnostics: dict = field(default_factory=dict)


@dataclass
class TauberEstimate:
    rho_hat: float
    residual: float  # RMS of the (ln x, ln U) fit
    x_grid: np.ndarray
    u_values: np.ndarray
    m_exponent: float  # gamma_hat in ln M = c - gamma_hat ln ln(1/x), M = U/x
    m_decreasing: bool  # M decreases as x -> 0 along the grid
    m_tends_to_zero: bool
    m_integral_diverges: bool
    m_integral_partial: np.ndarray  # int_{x_k}^{x_0} M(x)/x dx along the grid
    slowly_varying_ok: bool  # r^0.1 <= M(x)/M(x_0) <= r^-0.1, r = x/x_0, M = U/x^rho_hat


@dataclass
class ClassifyOptions:
    margin: float = 0.05
    x_grid: tuple = DEFAULT_X_GRID
    m_zero_tol: float = 0.05  # gamma_hat above this counts as M -> 0
    growth: GrowthOptions = field(default_factory=GrowthOptions)


@dataclass
class ExistenceVerdict:
    verdict: str
    evidence: list
    rho_hat: TauberEstimate | None = None
    m_behavior: dict | None = None
    growth: object = None

    def to_record(self):
        """Flat key=value lines (the machine-readable result record)."""
        lines = [f"verdict={self.verdict}"]
        for k, ev in enumerate(self.evidence, 1):
            lines.append(f"rule.{k}.id={ev.rule}")
            lines.append(f"rule.{k}.conclusive={str(ev.conclusive).lower()}")
            lines.append(f"rule.{k}.verdict={ev.verdict or '-'}")
            for key, val in ev.diagnostics.items():
                lines.append(f"rule.{k}.{key}={_fmt(val)}")
        if self.rho_hat is not None:
            lines.append(f"rho_hat={self.rho_hat.rho_hat!r}")
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def estimate_rho(model: LevyModel, x_grid=DEFAULT_X_GRID) -> TauberEstimate:
    """Least-squares slope of ln U against ln x, plus slowly-varying diagnostics."""
    x = np.sort(np.asarray(x_grid, float))[::-1]
    if len(x) < 4 or math.log10(x[0] / x[-1]) < 2 or x[-1] <= 0:
        raise ValueError("x-grid needs at least 4 positive points spanning 2 decades")
    if model.measure.lower < 0:
        raise ValueError("Tauber index needs a measure supported in [0, inf)")
    u = np.array([u_nu(model, float(v)) for v in x])
    if np.any(u <= 0) or not np.all(np.isfinite(u)):
        raise ValueError("U must be positive and finite on the grid")
    lx, lu = np.log(x), np.log(u)
    slope, icpt = np.polyfit(lx, lu, 1)
    resid = float(np.sqrt(np.mean((lu - (slope * lx + icpt)) ** 2)))

    # slowly varying remainder, normalised at the first grid point
    m_sv = (u / x**slope) / (u[0] / x[0] ** slope)
    r = x / x[0]
    sv_ok = bool(np.all((r**0.1 <= m_sv * (1 + 1e-12)) & (m_sv <= r**-0.1 * (1 + 1e-12))))

    # rho = 1 branch: M = U/x, fitted as c * ln(1/x)^-gamma
    m = u / x
    ll = np.log(-lx)
    gamma_hat = -float(np.polyfit(ll, np.log(m), 1)[0])
    decreasing = bool(np.all(np.diff(m) < 0))
    to_zero = decreasing and gamma_hat > 0.0
    # int M(x)/x dx = int M d(ln x): trapezoid in ln x
    steps = -np.diff(lx)
    partial = np.concatenate([[0.0], np.cumsum(0.5 * (m[1:] + m[:-1]) * steps)])
    return TauberEstimate(float(slope), resid, x, u, gamma_hat, decreasing, to_zero, gamma_hat <= 1.0, partial, sv_ok)


def classify(model: LevyModel, lambda_bounds, t_star: float, options: ClassifyOptions | None = None,
             exponent=None) -> ExistenceVerdict:
    opt = options or ClassifyOptions()
    lam_lo, lam_hi = (float(v) for v in lambda_bounds)
    if not (0 < lam_lo <= lam_hi):
        raise ValueError("lambda bounds must satisfy 0 < lower <= upper")
    report = validate_assumptions(model, lam_hi, InitialCurve.constant(1.0), t_star)
    if not (report.a2_ok and report.a4_ok):
        raise AssumptionError("; ".join(f for f in report.failures()), report)

    nu = model.measure
    mi = moment_integrals(model, lam_hi)
    evidence = []

    def done(verdict, **extra):
        return ExistenceVerdict(verdict, evidence, **extra)

    q_pos = model.gaussian_q > 0
    evidence.append(Evidence("gaussian", "Gaussian component excludes bounded solutions", q_pos,
                             NOT_EXISTS if q_pos else None, {"q": model.gaussian_q}))
    if q_pos:
        return done(NOT_EXISTS)

    neg = mi.neg_mass > 0
    evidence.append(Evidence("negative_jumps", "jumps in (-1/lambda_bar, 0) exclude bounded solutions", neg,
                             NOT_EXISTS if neg else None, {"neg_mass": mi.neg_mass, "lambda_bar": lam_hi}))
    if neg:
        return done(NOT_EXISTS)

    sub = nu.lower >= 0 and math.isfinite(mi.small_first)
    evidence.append(Evidence("subordinator", "positive jumps with finite int_0^1 y nu give a bounded J'", sub,
                             EXISTS if sub else None, {"small_first": mi.small_first, "support_lower": nu.lower}))
    if sub:
        return done(EXISTS)

    tauber = None
    m_behavior = None
    try:
        tauber = estimate_rho(model, opt.x_grid)
    except ValueError as exc:
        evidence.append(Evidence("tauber", "regular variation of U at 0", False, None, {"skipped": str(exc)}))
    if tauber is not None:
        r = tauber.rho_hat
        diag = {"rho_hat": r, "fit_residual": tauber.residual, "margin": opt.margin}
        if r > 1 + opt.margin:
            evidence.append(Evidence("tauber", "U regularly varying at 0 with index > 1", True, EXISTS, diag))
            return done(EXISTS, rho_hat=tauber)
        if r < 1 - opt.margin:
            evidence.append(Evidence("tauber", "U regularly varying at 0 with index < 1", True, NOT_EXISTS, diag))
            return done(NOT_EXISTS, rho_hat=tauber)
        m_behavior = {
            "m_exponent": tauber.m_exponent,
            "m_decreasing": tauber.m_decreasing,
            "m_tends_to_zero": tauber.m_exponent > opt.m_zero_tol and tauber.m_decreasing,
            "m_integral_diverges": tauber.m_integral_diverges,
            "m_integral_last": float(tauber.m_integral_partial[-1]),
        }
        diag.update(m_behavior)
        ok = nu.has_density and m_behavior["m_tends_to_zero"] and tauber.m_integral_diverges
        if not nu.has_density:
            diag["note"] = "index-one branch needs a density"
        evidence.append(Evidence("tauber", "index 1 with M -> 0 and divergent int M(x)/x dx", ok,
                                 EXISTS if ok else None, diag))
        if ok:
            return done(EXISTS, rho_hat=tauber, m_behavior=m_behavior)

    exp = exponent if exponent is not None else LaplaceExponent(model, lam_hi)
    growth = growth_classify(exp, lam_hi, t_star, opt.growth)
    verdict = {SUBLOG: EXISTS, SUPERCUBELOG: NOT_EXISTS}.get(growth.kind)
    evidence.append(Evidence("growth", "growth of J' at infinity against ln z and ln^3 z", verdict is not None,
                             verdict, {"kind": growth.kind, "reason": growth.reason,
                                       "sublog_top": float(growth.sublog_diag[-1])}))
    return done(verdict or INCONCLUSIVE, rho_hat=tauber, m_behavior=m_behavior, growth=growth)
