"""
Sums over manifold spectra that do not truncate.

On the manifold |alpha_n|^2 = w_n^2 (|c|^2/x) exp(-mu n), mu = log(xc/x), where
w_n = h_n (Z) or h_n / sqrt((s-1)n/2 + 1) (Y) decays like n^(-nu). Sums are
an exact head n <= n0 plus a tail K sum_{n>n0} n^(-sigma) z^n evaluated as a
polylogarithm minus its own head, with K matched at n0.
"""
from dataclasses import dataclass
import math
from typing import Optional

import mpmath
import numpy as np

from cascade_lab.core.config import LAB
from cascade_lab.core.errors import DomainError
from cascade_lab.series.genfun import criticality_gap
from cascade_lab.series.sequences import build_sequence_table, critical_constants
from cascade_lab.systems.couplings import FamilyKind
from cascade_lab.systems.manifold import ManifoldState, amplitudes_from_F, lift, time_to_critical

_THETA_CHUNK = 128
# exp(-mu n0) below this means the tail cannot matter
_TAIL_NEGLIGIBLE = 60.0
_MP_DPS = 40


def log_weights(family, s: float, n_max: int) -> np.ndarray:
    """log w_n, n = 0..n_max."""
    family = FamilyKind(family)
    table = build_sequence_table(float(s), n_max // 2 + 1, precise=False)
    n = np.arange(n_max + 1)
    base = table.logg if family == FamilyKind.Y else table.logf
    return base[: n_max + 1] + 0.5 * n * table.log_xc


def tail_exponent(family, s: float) -> float:
    if s == 1.0:
        return 0.0
    return 0.75 if FamilyKind(family) == FamilyKind.Z else 1.25


@dataclass(frozen=True)
class ManifoldProfile:
    """
    Amplitude data of a manifold state, independent of phases.

    :param c2_over_x: |c|^2 / x, finite at x = 0.
    :param mu: log(xc / x).
    """
    family: FamilyKind
    s: float
    b2: float
    c2_over_x: float
    mu: float


def profile_from_invariants(family, s: float, N: float, E: float,
                            F: Optional[float] = None, gap: Optional[float] = None) -> ManifoldProfile:
    """Profile at F (or at Fc - gap, which keeps full precision near criticality)."""
    family = FamilyKind(family)
    _, Fc, _ = critical_constants(s)
    if gap is not None:
        if not math.isfinite(Fc):
            raise DomainError("gap parameterization needs s > 1")
        F = Fc - gap
    if F is None:
        raise DomainError("need F or gap")
    if F <= 0.0:
        raise DomainError("profile needs F > 0")
    g = 1.0 + F
    if family == FamilyKind.Z and gap is not None:
        DE = E * (s - 1.0) * gap
        b2 = max(N - DE / g, 0.0)
        c2 = DE / g ** (s + 1.0)
    else:
        b2, c2, _ = amplitudes_from_F(family, s, N, E, F)
    mu = criticality_gap(s, F, gap=gap)
    return ManifoldProfile(family, s, b2, c2 * g ** s / F, mu)


def profile_from_state(m: ManifoldState, mu: Optional[float] = None) -> ManifoldProfile:
    xc, _, _ = critical_constants(m.s)
    x = m.x
    if x == 0.0:
        raise DomainError("profile needs p != 0")
    if mu is None:
        mu = math.log(xc / x)
    return ManifoldProfile(m.family, m.s, abs(m.b) ** 2, abs(m.c) ** 2 / x, mu)


def manifold_modsq(profile: ManifoldProfile, n_max: int) -> np.ndarray:
    logw = log_weights(profile.family, profile.s, n_max)
    out = np.empty(n_max + 1)
    out[0] = profile.b2
    n = np.arange(1, n_max + 1)
    if profile.c2_over_x == 0.0:
        out[1:] = 0.0
        return out
    out[1:] = np.exp(2.0 * logw[1:] + math.log(profile.c2_over_x) - profile.mu * n)
    return out


def _real_tail(sigma: float, mu: float, n0: int, partial: float) -> float:
    """sum_{n>n0} n^-sigma e^(-mu n), given the head sum up to n0."""
    if mu * n0 > _TAIL_NEGLIGIBLE:
        return 0.0
    with mpmath.workdps(_MP_DPS):
        z = mpmath.exp(-mpmath.mpf(mu))
        total = mpmath.polylog(sigma, z)
        return float(total - partial)


def manifold_sobolev(profile: ManifoldProfile, xi: float, head: int = LAB.TAIL_HEAD,
                     squared: bool = False) -> float:
    """(sum (n+1)^(2 xi) |alpha_n|^2)^(1/2), tail included."""
    n0 = head
    logw = log_weights(profile.family, profile.s, n0)
    n = np.arange(1, n0 + 1)
    body = 2.0 * xi * np.log(n + 1.0) + 2.0 * logw[1:] - profile.mu * n
    total = math.fsum(np.exp(body))

    nu = tail_exponent(profile.family, profile.s)
    sigma = 2.0 * nu - 2.0 * xi
    K = math.exp(2.0 * xi * math.log(n0 + 1.0) + 2.0 * logw[n0] + sigma * math.log(n0))
    partial = math.fsum(np.exp(-sigma * np.log(n) - profile.mu * n))
    total += K * _real_tail(sigma, profile.mu, n0, partial)

    value = profile.b2 + profile.c2_over_x * total
    return value if squared else math.sqrt(value)


def manifold_u(m: ManifoldState, theta, mu: Optional[float] = None,
               head: int = LAB.TAIL_HEAD, tail: bool = True, relative: bool = False) -> np.ndarray:
    """
    u(theta) = sum_n alpha_n e^(i n theta) for a manifold state, all modes included.

    :param mu: log(xc/x) if known more precisely than from |p|^2 (0 at blow-up).
    :param head: number of modes summed exactly.
    :param relative: theta is given relative to -arg(p), the point the spectrum focuses on.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if m.p == 0:
        return lift(m, 1).alpha[0] + lift(m, 1).alpha[1] * np.exp(1j * theta)
    xc, _, _ = critical_constants(m.s)
    if mu is None:
        mu = math.log(xc / m.x)
    n0 = head
    logw = log_weights(m.family, m.s, n0)
    n = np.arange(1, n0 + 1)
    amp = np.exp(logw[1:] - 0.5 * mu * n)
    nu = tail_exponent(m.family, m.s)
    K = math.exp(logw[n0] + nu * math.log(n0))
    ref = np.exp(-nu * np.log(n) - 0.5 * mu * n)
    use_tail = tail and 0.5 * mu * n0 <= _TAIL_NEGLIGIBLE

    psi = theta if relative else theta + np.angle(m.p)
    series = np.empty(theta.size, dtype=complex)
    for start in range(0, theta.size, _THETA_CHUNK):
        block = psi[start: start + _THETA_CHUNK]
        phases = np.exp(1j * np.outer(block, n))
        series[start: start + block.size] = phases @ amp
        if use_tail:
            partial = phases @ ref
            with mpmath.workdps(_MP_DPS):
                rho = mpmath.exp(-mpmath.mpf(mu) / 2)
                for i, angle in enumerate(block):
                    z = rho * mpmath.expj(mpmath.mpf(float(angle)))
                    value = mpmath.polylog(nu, z)
                    series[start + i] += K * (complex(value) - partial[i])
    return m.b + (m.c / m.p) * series


def sobolev_approach(family, s: float, N: float, E: float, S: float, xi_list,
                     gap_range=(1e-8, 1e-4), points: int = 41, squared: bool = False):
    """
    Sobolev norms along the manifold cascade as the gap Fc - F closes.

    Gaps are log-spaced over gap_range (relative to Fc); times to blow-up come
    from the quadrature of dF / sqrt(-V).

    :return: dict with arrays "gap", "tau" and one array per xi.
    """
    _, Fc, _ = critical_constants(s)
    if not math.isfinite(Fc):
        raise DomainError("no cascade for s = 1")
    lo, hi = gap_range
    if not 0.0 < lo < hi < 1.0:
        raise DomainError(f"gap range {gap_range} must satisfy 0 < lo < hi < 1")
    gaps = Fc * np.logspace(math.log10(hi), math.log10(lo), points)
    out = {"gap": gaps, "tau": np.empty(points)}
    for xi in xi_list:
        out[xi] = np.empty(points)
    for i, d in enumerate(gaps):
        out["tau"][i] = time_to_critical(family, s, N, E, S, Fc - d)
        profile = profile_from_invariants(family, s, N, E, gap=d)
        for xi in xi_list:
            out[xi][i] = manifold_sobolev(profile, xi, squared=squared)
    return out
