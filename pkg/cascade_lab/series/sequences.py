"""
Fuss-Catalan numbers A_n^(s) and the derived sequences f_n = sqrt(A_n),
g_n = f_n / sqrt((s-1)n/2 + 1), all held in log space.

f_n grows like xc^(-n/2), so products of f's are always formed from sums
and differences of logs and exponentiated only once the result is O(1).
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import mpmath
import numpy as np
from scipy.special import gammaln, xlogy

from cascade_lab.core.errors import DomainError


@dataclass(frozen=True, eq=False)
class SequenceTable:
    """
    Immutable log tables for one (s, L).

    :param logA: log A_n for n = 0..2L.
    :param logf: log f_n = logA/2.
    :param logg: log g_n (logg[0] = 0).
    :param logh: log of the scaled sequence h_n = f_n * xc^(n/2), O(n^-3/4).
    """
    s: float
    L: int
    logA: np.ndarray
    logf: np.ndarray
    logg: np.ndarray
    logh: np.ndarray
    xc: float
    Fc: float
    log_xc: float

    @property
    def A(self) -> np.ndarray:
        return np.exp(self.logA)

    @property
    def f(self) -> np.ndarray:
        return np.exp(self.logf)

    @property
    def g(self) -> np.ndarray:
        return np.exp(self.logg)


def critical_constants(s: float):
    """Returns (xc, Fc, log xc); Fc is +inf for s = 1."""
    if s < 1.0:
        raise DomainError(f"s must be >= 1, got {s}")
    log_xc = float(xlogy(s - 1.0, s - 1.0) - s * math.log(s))
    Fc = math.inf if s == 1.0 else 1.0 / (s - 1.0)
    return math.exp(log_xc), Fc, log_xc


def _log_fuss_catalan_precise(s: float, n_max: int) -> np.ndarray:
    # Extended precision keeps the O(n log n) log-gamma terms from eating
    # the last digits of the O(n) result.
    out = np.empty(n_max + 1)
    with mpmath.workdps(30):
        sm = mpmath.mpf(s)
        for n in range(n_max + 1):
            value = (mpmath.loggamma(sm * n + 1)
                     - mpmath.loggamma((sm - 1) * n + 2)
                     - mpmath.loggamma(n + 1))
            out[n] = float(value)
    out[0] = 0.0
    out[1] = 0.0
    return out


def log_fuss_catalan(s: float, n) -> np.ndarray:
    """Vectorized log A_n^(s) with scipy's gammaln (fast, ~1e-13 relative)."""
    n = np.asarray(n, dtype=float)
    return gammaln(s * n + 1.0) - gammaln((s - 1.0) * n + 2.0) - gammaln(n + 1.0)


@lru_cache(maxsize=64)
def build_sequence_table(s: float, L: int, precise: bool = True) -> SequenceTable:
    """
    Builds the log tables for indices 0..2L.

    :param precise: evaluate log-gamma in extended precision (mpmath); the fast
        path uses scipy.special.gammaln and is meant for long synthesis heads.
    """
    s = float(s)
    if s < 1.0:
        raise DomainError(f"s must be >= 1, got {s}")
    if L < 0:
        raise DomainError(f"L must be >= 0, got {L}")

    xc, Fc, log_xc = critical_constants(s)
    n = np.arange(2 * L + 1)
    if s == 1.0:
        logA = np.zeros(2 * L + 1)
    elif precise:
        logA = _log_fuss_catalan_precise(s, 2 * L)
    else:
        logA = log_fuss_catalan(s, n)
        logA[: min(2, logA.size)] = 0.0

    logf = 0.5 * logA
    logg = logf - 0.5 * np.log((s - 1.0) * n / 2.0 + 1.0)
    logh = logf + 0.5 * n * log_xc
    for arr in (logA, logf, logg, logh):
        arr.setflags(write=False)
    return SequenceTable(s=s, L=L, logA=logA, logf=logf, logg=logg, logh=logh,
                         xc=xc, Fc=Fc, log_xc=log_xc)


def f_asymptotic(s: float, n) -> np.ndarray:
    """Leading large-n behavior of f_n; for tail estimates and tests only."""
    if s <= 1.0:
        raise DomainError("f_asymptotic is singular at s = 1")
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise DomainError("f_asymptotic needs n >= 1")
    _, _, log_xc = critical_constants(s)
    log_val = (0.25 * math.log(s / (2.0 * math.pi * (s - 1.0) ** 3))
               - 0.75 * np.log(n) - 0.5 * n * log_xc)
    return np.exp(log_val)


def verify_convolution_identity(s: float, M: int, relative: bool = False) -> float:
    """
    Residual of sum_{k=1}^{M-1} A_{M-k} A_k = (M-1)/((s-1)M/2 + 1) * A_M.

    Both sides are scaled by the largest term before exponentiating.
    """
    if M < 2:
        raise DomainError(f"M must be >= 2, got {M}")
    table = build_sequence_table(float(s), (M + 1) // 2)
    logA = table.logA
    k = np.arange(1, M)
    terms = logA[M - k] + logA[k]
    rhs = math.log(M - 1) - math.log((s - 1.0) * M / 2.0 + 1.0) + logA[M]
    scale = max(float(terms.max()), rhs)
    lhs_scaled = math.fsum(np.exp(terms - scale))
    rhs_scaled = math.exp(rhs - scale)
    diff = abs(lhs_scaled - rhs_scaled)
    if relative:
        return diff / rhs_scaled
    return diff * math.exp(scale)


def ratio_bound(table: SequenceTable) -> float:
    """max over n, m <= L of f_n f_m / f_{n+m}."""
    idx = np.arange(table.L + 1)
    logf = table.logf
    grid = logf[idx][:, None] + logf[idx][None, :] - logf[idx[:, None] + idx[None, :]]
    return float(np.exp(grid.max()))
