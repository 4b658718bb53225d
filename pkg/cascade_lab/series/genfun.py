"""
Generating functions F(x) = sum f_n^2 x^n and G(x) = sum g_n^2 x^n.

F is evaluated mostly through its algebraic inverse x = F/(1+F)^s; the power
series is kept as an independent cross-check.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from cascade_lab.core.config import LAB
from cascade_lab.core.errors import DomainError
from cascade_lab.series.sequences import SequenceTable, log_fuss_catalan

# Roundoff slack when checking F against Fc and x against xc
_EDGE_SLACK = 1e-13
_SERIES_CHUNK = 4096
_SERIES_MAX_TERMS = 50_000_000


@dataclass(frozen=True, eq=False)
class GenFunContext:
    table: SequenceTable
    series_tol: float = LAB.SERIES_TOL
    newton_tol: float = LAB.NEWTON_TOL

    def __post_init__(self):
        for name in ("series_tol", "newton_tol"):
            value = getattr(self, name)
            if not 0.0 < value <= 1e-6:
                raise DomainError(f"{name} must lie in (0, 1e-6], got {value}")

    @property
    def s(self) -> float:
        return self.table.s


def _check_x(table: SequenceTable, x: float):
    if x < 0.0:
        raise DomainError(f"negative x: {x}")
    if x >= table.xc:
        raise DomainError(f"supercritical x: {x} >= xc = {table.xc}")


def _check_F(s: float, F: float) -> float:
    Fc = math.inf if s == 1.0 else 1.0 / (s - 1.0)
    if F < 0.0 or F > Fc * (1.0 + _EDGE_SLACK):
        raise DomainError(f"F = {F} outside [0, Fc = {Fc}]")
    return min(F, Fc)


def F_series(ctx: GenFunContext, x: float) -> float:
    """
    Direct summation of sum_{n>=1} A_n x^n.

    Successive term ratios are bounded by x/xc, so the tail after a term t_N
    is at most t_N q/(1-q) with q = x/xc.
    """
    table = ctx.table
    _check_x(table, x)
    if x == 0.0:
        return 0.0
    s = table.s
    q = x / table.xc
    log_x = math.log(x)
    partial = 0.0
    start = 1
    while start < _SERIES_MAX_TERMS:
        n = np.arange(start, start + _SERIES_CHUNK, dtype=float)
        log_terms = (np.zeros_like(n) if s == 1.0 else log_fuss_catalan(s, n)) + n * log_x
        terms = np.exp(log_terms)
        partial += math.fsum(terms)
        tail_bound = terms[-1] * q / (1.0 - q)
        if tail_bound < ctx.series_tol * partial:
            return partial
        start += _SERIES_CHUNK
    raise DomainError(f"series for F did not converge at x = {x}")


def x_of_F(s: float, F: float) -> float:
    F = _check_F(s, F)
    return F / (1.0 + F) ** s


def F_of_x(ctx: GenFunContext, x: float) -> float:
    """Inverts x = F/(1+F)^s on [0, Fc] with a bracketed root finder."""
    table = ctx.table
    _check_x(table, x)
    if x == 0.0:
        return 0.0
    s = table.s
    if s == 1.0:
        return x / (1.0 - x)
    Fc = table.Fc
    # log form stays well scaled near both ends of the bracket
    target = math.log(x)

    def residual(F):
        return math.log(F) - s * math.log1p(F) - target

    lo = x  # F >= x since all coefficients are >= 1
    return brentq(residual, lo, Fc, xtol=ctx.newton_tol * Fc, rtol=1e-15, maxiter=200)


def F_prime(s: float, F: float, diverge: str = "inf") -> float:
    """
    dF/dx as a function of F: (1+F)^(s+1) / (1 - (s-1)F).

    :param diverge: "inf" returns +inf at F = Fc, "raise" raises DomainError.
    """
    F = _check_F(s, F)
    denominator = 1.0 - (s - 1.0) * F
    if denominator <= 0.0:
        if diverge == "raise":
            raise DomainError("F'(x) diverges at F = Fc")
        return math.inf
    return (1.0 + F) ** (s + 1.0) / denominator


def G_of_F(s: float, F: float) -> float:
    F = _check_F(s, F)
    return F * (2.0 - (s - 1.0) * F) / (s + 1.0)


def criticality_gap(s: float, F: float, gap: float = None) -> float:
    """
    mu = log(xc / x(F)), accurate when F is close to Fc.

    :param gap: Fc - F, if the caller knows it more precisely than F itself.
    """
    if s == 1.0:
        F = _check_F(s, F)
        return math.inf if F == 0.0 else math.log1p(1.0 / F)
    Fc = 1.0 / (s - 1.0)
    d = Fc - F if gap is None else gap
    if d < 0.0:
        if d < -_EDGE_SLACK * Fc:
            raise DomainError(f"F beyond Fc (gap {d})")
        d = 0.0
    if d >= Fc:
        return math.inf
    if d == 0.0:
        return 0.0
    value, _ = quad(lambda v: v / ((Fc - v) * (1.0 + Fc - v)), 0.0, d,
                    epsabs=0.0, epsrel=1e-13, limit=200)
    return (s - 1.0) * value


def gap_from_criticality(s: float, mu: float) -> float:
    """Inverse of criticality_gap: the gap Fc - F for a given log(xc/x)."""
    if s <= 1.0:
        raise DomainError("no critical point for s = 1")
    if mu < 0.0:
        raise DomainError(f"negative criticality gap {mu}")
    if mu == 0.0:
        return 0.0
    Fc = 1.0 / (s - 1.0)
    # mu ~ (s-1) d^2 / (2 Fc (1 + Fc)) for small d
    guess = math.sqrt(2.0 * Fc * (1.0 + Fc) * mu / (s - 1.0))
    hi = min(Fc, 4.0 * guess)
    while criticality_gap(s, Fc - hi, gap=hi) < mu and hi < Fc:
        hi = min(Fc, 2.0 * hi)
    if hi >= Fc:
        hi = Fc * (1.0 - 1e-15)
    return brentq(lambda d: criticality_gap(s, Fc - d, gap=d) - mu,
                  0.0, hi, xtol=1e-300, rtol=1e-15, maxiter=300)
