"""
Closed-form cascade solutions: Z condensation and the explicit Y cascade.

Near the blow-up time the distance to criticality is always formed
directly from T - t (never as Fc - F(t)), so states stay accurate down to
the last representable gap.
"""
from dataclasses import dataclass
import math
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from cascade_lab.core.errors import BranchMismatchError, DomainError
from cascade_lab.series.genfun import gap_from_criticality, criticality_gap, x_of_F
from cascade_lab.series.sequences import build_sequence_table
from cascade_lab.systems.couplings import FamilyKind, ModeState
from cascade_lab.systems.manifold import ManifoldState, lift, potential_poly

BRANCH_TOL = 1e-12

GENERIC = "generic"
TWO_MODE = "two_mode"
ZERO_B = "zero_b"
Y_EXPLICIT = "y_explicit"


@dataclass(frozen=True)
class CascadeSolution:
    family: FamilyKind
    s: float
    N: float
    E: float
    S: float
    F0: float
    Omega: float
    T: float
    branch: str
    phi_b0: float = 0.0
    phi_p0: float = 0.0

    @property
    def Fc(self) -> float:
        return 1.0 / (self.s - 1.0)

    @property
    def xc(self) -> float:
        return build_sequence_table(self.s, 1).xc

    @property
    def Ec(self) -> float:
        return 2.0 * self.s * self.N / (self.s - 1.0)


def _check_params(s: float, N: float, E: Optional[float] = None):
    if not s > 1.0:
        raise DomainError(f"closed-form cascades need s > 1, got {s}")
    if not N > 0.0:
        raise DomainError(f"N must be positive, got {N}")
    if E is not None and not E > 0.0:
        raise DomainError(f"E must be positive, got {E}")


def _check_time(sol: CascadeSolution, t: float, allow_T: bool = True):
    if t < 0.0 or t > sol.T * (1.0 + 1e-14):
        raise DomainError(f"t = {t} outside [0, T = {sol.T}]")
    if not allow_T and t >= sol.T:
        raise DomainError("phases are not defined at t = T")


def continuous_arctan_tan(k: float, theta):
    """arctan(k tan(theta)) continued through theta = pi/2 + j pi."""
    theta = np.asarray(theta, dtype=float)
    turns = np.floor((theta + 0.5 * math.pi) / math.pi)
    base = np.arctan2(abs(k) * np.sin(theta - turns * math.pi), np.cos(theta - turns * math.pi))
    return math.copysign(1.0, k) * (base + turns * math.pi)


# ---------------------------------------------------------------- Z family

def z_condensation_solution(s: float, N: float, E: float) -> CascadeSolution:
    _check_params(s, N, E)
    Fc = 1.0 / (s - 1.0)
    F0 = Fc * (N - s * E) ** 2 / (N + s * E) ** 2
    Omega = math.sqrt(((N - s * E) ** 2 + (s - 1.0) * (N + s * E) ** 2) / (4.0 * s))
    if abs(N - s * E) <= BRANCH_TOL * N:
        branch = TWO_MODE
    elif abs(N - (2.0 - s) * E) <= BRANCH_TOL * N:
        branch = ZERO_B
    else:
        branch = GENERIC
    phi_p0 = -math.pi if N > s * E else 0.0
    phi_b0 = -math.pi if N < (2.0 - s) * E else 0.0
    return CascadeSolution(FamilyKind.Z, s, N, E, 2.0 * (s - 1.0) * N, F0, Omega,
                           math.pi / (2.0 * Omega), branch, phi_b0, phi_p0)


def z_condensation_initial_data(s: float, N: float, E: float) -> ManifoldState:
    _check_params(s, N, E)
    denom = (N - s * E) ** 2 + (s - 1.0) * (N + s * E) ** 2
    p0 = ((s * E - N) / (math.sqrt(s - 1.0) * (N + s * E))
          * ((s - 1.0) * (N + s * E) ** 2 / denom) ** (s / 2.0))
    b0 = (N + (s - 2.0) * E) * math.sqrt(s * N / denom)
    c0 = (2.0 * E * math.sqrt(s * N) * (N + s * E) ** s
          * ((s - 1.0) / denom) ** ((s + 1.0) / 2.0))
    return ManifoldState(FamilyKind.Z, s, b0, c0, p0)


def z_F_of_t(sol: CascadeSolution, t: float) -> float:
    _check_time(sol, t)
    s = sol.s
    a = 1.0 - (s - 1.0) * sol.F0
    sin2 = math.sin(sol.Omega * t) ** 2
    return (s * sol.F0 + a * sin2) / (s - a * sin2)


def z_gap_of_t(sol: CascadeSolution, t: float) -> float:
    """Fc - F(t), from cos(Omega t) = sin(Omega (T - t))."""
    _check_time(sol, t)
    s = sol.s
    a = 1.0 - (s - 1.0) * sol.F0
    cos_t = math.sin(sol.Omega * (sol.T - t))
    sin2 = 1.0 - cos_t * cos_t
    return a * (sol.Fc + 1.0) * cos_t * cos_t / (s - a * sin2)


def z_phases(sol: CascadeSolution, t: float, branch: Optional[str] = None) -> Tuple[float, float, float]:
    """(phi_b, phi_c, phi_p) at time t in [0, T)."""
    if sol.family != FamilyKind.Z:
        raise BranchMismatchError("z_phases needs a Z solution")
    branch = sol.branch if branch is None else branch
    if branch != sol.branch:
        raise BranchMismatchError(f"{branch} phases requested for a {sol.branch} solution")
    _check_time(sol, t, allow_T=False)
    s, N, E, W = sol.s, sol.N, sol.E, sol.Omega
    th = W * t
    if branch == TWO_MODE:
        phi_b = -s * E * t - continuous_arctan_tan(math.sqrt(s / (s - 1.0)), th)
        inner = continuous_arctan_tan(math.sqrt((s - 1.0) / s), th)
        phi_c = -s * E * t - s * inner
        phi_p = -0.5 * math.pi - (s - 1.0) * inner
    elif branch == ZERO_B:
        inner = continuous_arctan_tan(math.sqrt(s - 1.0), th)
        phi_b = -0.5 * math.pi - E * t
        phi_c = (s * s - s - 1.0) * E * t - s * inner
        phi_p = (s * (s - 1.0) * E * t - continuous_arctan_tan(1.0 / math.sqrt(s - 1.0), th)
                 - (s - 1.0) * inner)
    else:
        shared = continuous_arctan_tan(2.0 * W / (s * E + N), th)
        phi_b = (sol.phi_b0 - 0.5 * (s * E + N) * t
                 - continuous_arctan_tan(2.0 * W / ((s - 2.0) * E + N), th))
        phi_c = 0.5 * ((s - 1.0) * s * E - (s + 1.0) * N) * t - s * shared
        phi_p = (sol.phi_p0 + 0.5 * s * (s * E - N) * t
                 + continuous_arctan_tan(2.0 * W / (N - s * E), th) - (s - 1.0) * shared)
    return float(phi_b), float(phi_c), float(phi_p)


def z_state(sol: CascadeSolution, t: float) -> ManifoldState:
    s, E, N = sol.s, sol.E, sol.N
    d = z_gap_of_t(sol, t)
    F = sol.Fc - d
    g = 1.0 + F
    DE = E * (s - 1.0) * d  # (1 - (s-1)F) E
    b2 = max(N - DE / g, 0.0)
    c2 = DE / g ** (s + 1.0)
    x = x_of_F(s, F)
    phi_b, phi_c, phi_p = z_phases(sol, t)
    return ManifoldState(FamilyKind.Z, s,
                         math.sqrt(b2) * complex(math.cos(phi_b), math.sin(phi_b)),
                         math.sqrt(c2) * complex(math.cos(phi_c), math.sin(phi_c)),
                         math.sqrt(x) * complex(math.cos(phi_p), math.sin(phi_p)))


def z_alpha(sol: CascadeSolution, t: float, n: int, L: int) -> complex:
    if not 0 <= n <= L:
        raise DomainError(f"mode {n} outside [0, {L}]")
    return complex(lift(z_state(sol, t), L).alpha[n])


def z_asymptotics(sol: CascadeSolution, t: float) -> Dict[str, float]:
    """Leading behavior of |c|^2 and 1 - x/xc as t -> T."""
    tau = sol.T - t
    s, N, E = sol.s, sol.N, sol.E
    return {
        "c_sq": (s - 1.0) ** 2 * sol.xc * E * E * N * tau ** 2,
        "criticality": 0.5 * s * (s - 1.0) * E * E * N * N * tau ** 4,
    }


# ---------------------------------------------------------------- Y family

def y_explicit_solution(s: float, N: float) -> CascadeSolution:
    _check_params(s, N)
    E = 4.0 * N / (s + 5.0)
    S = 2.0 * N * (s - 1.0) * (s + 2.0) / (s + 5.0)
    Omega = math.sqrt(15.0) * (s + 1.0) * N / (2.0 * (s + 5.0))
    T = math.asinh(math.sqrt(15.0 / (8.0 * (s - 1.0)))) / Omega
    return CascadeSolution(FamilyKind.Y, s, N, E, S, 0.0, Omega, T, Y_EXPLICIT, 0.0, -0.5 * math.pi)


def y_initial_data(s: float, N: float) -> ManifoldState:
    _check_params(s, N)
    g1 = 1.0 / math.sqrt((s - 1.0) / 2.0 + 1.0)
    return ManifoldState(FamilyKind.Y, s, math.sqrt((s + 1.0) * N / (s + 5.0)),
                         math.sqrt(4.0 * N / (s + 5.0)) / g1, 0.0)


def y_F_of_t(sol: CascadeSolution, t: float) -> float:
    _check_time(sol, t)
    return 8.0 / 15.0 * math.sinh(sol.Omega * t) ** 2


def y_gap_of_t(sol: CascadeSolution, t: float) -> float:
    _check_time(sol, t)
    tau = max(sol.T - t, 0.0)
    W = sol.Omega
    return 8.0 / 15.0 * math.sinh(W * tau) * math.sinh(W * (sol.T + t))


def y_phases(sol: CascadeSolution, t: float) -> Tuple[float, float, float]:
    if sol.family != FamilyKind.Y:
        raise BranchMismatchError("y_phases needs a Y solution")
    _check_time(sol, t)
    s, W = sol.s, sol.Omega
    th = math.tanh(W * t)
    r = math.sqrt(3.0 / 5.0)
    ath = math.atanh(math.sqrt(7.0 / 15.0) * th)
    phi_c = -r * (s + 1.0) * W * t + (s + 1.0) / math.sqrt(7.0) * ath
    phi_p = -0.5 * math.pi - r * (s - 1.0) * W * t + (s + 2.0) / math.sqrt(7.0) * ath
    phi_b = -2.0 * r * W * t - ath / math.sqrt(7.0) - math.atan(r * th)
    return phi_b, phi_c, phi_p


def y_state(sol: CascadeSolution, t: float) -> ManifoldState:
    s, N, E = sol.s, sol.N, sol.E
    d = y_gap_of_t(sol, t)
    F = sol.Fc - d
    g = 1.0 + F
    b2 = max(N - (2.0 - (s - 1.0) * F) * E / (2.0 * g), 0.0)
    c2 = (s + 1.0) * E / (2.0 * g ** (s + 1.0))
    x = x_of_F(s, F)
    phi_b, phi_c, phi_p = y_phases(sol, t)
    return ManifoldState(FamilyKind.Y, s,
                         math.sqrt(b2) * complex(math.cos(phi_b), math.sin(phi_b)),
                         math.sqrt(c2) * complex(math.cos(phi_c), math.sin(phi_c)),
                         math.sqrt(x) * complex(math.cos(phi_p), math.sin(phi_p)))


def y_alpha(sol: CascadeSolution, t: float, n: int, L: int) -> complex:
    if not 0 <= n <= L:
        raise DomainError(f"mode {n} outside [0, {L}]")
    if t >= sol.T:
        raise DomainError("the lift is not defined at t = T; use y_limit_spectrum")
    return complex(lift(y_state(sol, t), L).alpha[n])


def y_limit_spectrum(sol: CascadeSolution, n_max: int) -> np.ndarray:
    """|alpha_n(T)|^2 for n = 0..n_max."""
    s, N, E = sol.s, sol.N, sol.E
    table = build_sequence_table(s, (n_max + 1) // 2 + 1, precise=False)
    out = np.empty(n_max + 1)
    ratio = E / sol.Ec
    out[0] = N * (1.0 - ratio)
    n = np.arange(1, n_max + 1)
    out[1:] = np.exp(math.log((s * s - 1.0) * N * ratio) + 2.0 * table.logg[n] + n * table.log_xc)
    return out


def y_near_T_F(sol: CascadeSolution, tau: float) -> float:
    """Second-order expansion of F(T - tau)."""
    poly = potential_poly(FamilyKind.Y, sol.N, sol.E, sol.S, sol.s)
    Fc = sol.Fc
    return Fc - math.sqrt(-poly(Fc)) * tau - poly.deriv()(Fc) * tau * tau / 4.0


# ---------------------------------------------------------------- shared

def solution_state(sol: CascadeSolution, t: float) -> ManifoldState:
    return z_state(sol, t) if sol.family == FamilyKind.Z else y_state(sol, t)


def solution_gap(sol: CascadeSolution, t: float) -> float:
    return z_gap_of_t(sol, t) if sol.family == FamilyKind.Z else y_gap_of_t(sol, t)


def solution_mode_state(sol: CascadeSolution, t: float, L: int) -> ModeState:
    state = lift(solution_state(sol, t), L)
    state.t = t
    return state


def criticality_at(sol: CascadeSolution, t: float) -> float:
    """log(xc/x(t)); 1 - x/xc = -expm1(-mu)."""
    d = solution_gap(sol, t)
    return criticality_gap(sol.s, sol.Fc - d, gap=d)


def time_at_gap(sol: CascadeSolution, delta: float, remaining: bool = False) -> float:
    """
    Time at which 1 - x/xc = delta.

    :param remaining: return T - t instead of t.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    s, W = sol.s, sol.Omega
    d = gap_from_criticality(s, -math.log1p(-delta))
    if sol.family == FamilyKind.Z:
        a = 1.0 - (s - 1.0) * sol.F0
        if d > a * sol.Fc:
            raise DomainError(f"1 - x/xc = {delta} is never reached after t = 0")
        cos2 = d * (s - a) / (a * (sol.Fc + 1.0 - d))
        tau = math.asin(math.sqrt(cos2)) / W
    else:
        if d > sol.Fc:
            raise DomainError(f"1 - x/xc = {delta} is never reached after t = 0")
        T = sol.T
        tau = brentq(lambda u: 8.0 / 15.0 * math.sinh(W * u) * math.sinh(W * (2.0 * T - u)) - d,
                     0.0, T, xtol=1e-300, rtol=1e-15, maxiter=300)
    return tau if remaining else sol.T - tau
