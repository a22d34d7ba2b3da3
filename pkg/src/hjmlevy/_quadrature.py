"""Quadrature helpers shared by the measure and exponent code.

Integrals near the origin are computed in the variable s = -ln|y|, which
turns power-type singularities y**(-1-p) into exponentials. Integrands are
passed as *log* integrands so that e.g. y**(-1-p) at y = 1e-300 never
overflows.
"""

import math

from scipy import integrate

REL_TOL = 1e-12
DIVERGENCE_THRESHOLD = 1e12


class _Overflow(Exception):
    pass


def quad_exp(log_f, lo, hi, points=()):
    """Integral of exp(log_f(s)) over [lo, hi]; hi may be +inf.

    Returns math.inf if the integrand itself overflows a double.
    """
    if not hi > lo:
        return 0.0

    def f(s):
        v = log_f(s)
        if v > 709.0:
            raise _Overflow
        return math.exp(v) if v > -745.0 else 0.0

    cuts = sorted(p for p in points if lo < p < hi)
    edges = [lo, *cuts, hi]
    total = 0.0
    try:
        for a, b in zip(edges[:-1], edges[1:]):
            total += integrate.quad(f, a, b, epsabs=0.0, epsrel=REL_TOL, limit=400)[0]
    except _Overflow:
        return math.inf
    return total


def quad_plain(f, lo, hi, points=()):
    """Plain adaptive quadrature, splitting at interior break points."""
    if not hi > lo:
        return 0.0
    cuts = sorted(p for p in points if lo < p < hi)
    edges = [lo, *cuts, hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, a, b, epsabs=0.0, epsrel=REL_TOL, limit=400)[0]
    return total


def shell_integral(log_f, s_lo, s_hi=745.0, shell=1.0, tail_rel=1e-9):
    """Integrate exp(log_f) over [s_lo, s_hi] shell by shell, flagging divergence.

    Each shell of unit length in s is a factor e in |y| (geometric refinement
    towards the singular end). Returns ``math.inf`` when the partial sums pass
    DIVERGENCE_THRESHOLD or fail to settle: the last 50 shells still carry
    more than ``tail_rel`` of the total once the s-range is exhausted.
    """
    total = 0.0
    contributions = []
    s = s_lo
    while s < s_hi:
        b = min(s + shell, s_hi)
        c = quad_exp(log_f, s, b)
        total += c
        contributions.append(c)
        if total > DIVERGENCE_THRESHOLD:
            return math.inf
        if len(contributions) > 60 and sum(contributions[-50:]) < 1e-17 * max(total, 1e-300):
            return total
        s = b
    if len(contributions) > 50 and sum(contributions[-50:]) > tail_rel * total:
        return math.inf
    return total


def log1mexp(x):
    """log(1 - exp(-x)) for x >= 0."""
    if x <= 0.0:
        return -math.inf
    if x < 1e-8:
        return math.log(x) - 0.5 * x
    if x > 40.0:
        return -math.exp(-x)
    return math.log(-math.expm1(-x))


def log_expm1(x):
    """log(exp(x) - 1) for x > 0."""
    if x <= 0.0:
        return -math.inf
    if x < 1e-8:
        return math.log(x) + 0.5 * x
    if x > 30.0:
        return x + math.log1p(-math.exp(-x))
    return math.log(math.expm1(x))


def log_compensated_neg(x):
    """log(exp(-x) - 1 + x) for x >= 0."""
    if x <= 0.0:
        return -math.inf
    if x < 1e-3:
        return 2.0 * math.log(x) + math.log(0.5 * (1.0 - x / 3.0 + x * x / 12.0 - x**3 / 60.0))
    return math.log(math.expm1(-x) + x)


def log_compensated_pos(x):
    """log(exp(x) - 1 - x) for x >= 0."""
    if x <= 0.0:
        return -math.inf
    if x < 1e-3:
        return 2.0 * math.log(x) + math.log(0.5 * (1.0 + x / 3.0 + x * x / 12.0 + x**3 / 60.0))
    if x > 30.0:
        return x + math.log1p(-(1.0 + x) * math.exp(-x))
    return math.log(math.expm1(x) - x)

