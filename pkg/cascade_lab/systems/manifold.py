"""
The three-variable invariant manifold of the Z and Y systems.

alpha_0 = b, alpha_n = w_n c p^(n-1) (n >= 1) with w = f (Z) or g (Y).
Everything here is written in terms of F = F(x), x = |p|^2, using the
identities F/x = (1+F)^s and 1 - (s-1)F = (s-1)(Fc - F) so that p = 0 and
the approach to Fc need no special limits.
"""
from dataclasses import dataclass, field
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad
from scipy.optimize import brentq

from cascade_lab.core.config import LAB
from cascade_lab.core.errors import AdmissibilityError, DomainError
from cascade_lab.series.genfun import GenFunContext, F_of_x, x_of_F, F_prime
from cascade_lab.series.sequences import build_sequence_table, critical_constants
from cascade_lab.systems.couplings import FamilyKind, ModeState

logger = logging.getLogger("MANIFOLD")

MOTION_KINDS = ("time_periodic", "stationary", "cascade_finite_T", "cascade_boundary")


@dataclass(frozen=True)
class ManifoldState:
    family: FamilyKind
    s: float
    b: complex
    c: complex
    p: complex

    def __post_init__(self):
        object.__setattr__(self, "family", FamilyKind(self.family))
        if self.family not in (FamilyKind.Z, FamilyKind.Y):
            raise DomainError(f"no invariant manifold for family {self.family.value}")
        if self.s < 1.0:
            raise DomainError(f"s must be >= 1, got {self.s}")
        for name in ("b", "c", "p"):
            value = complex(getattr(self, name))
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise DomainError(f"manifold coordinate {name} is not finite")
            object.__setattr__(self, name, value)

    @property
    def x(self) -> float:
        return abs(self.p) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.b, self.c, self.p], dtype=complex)

    def with_values(self, y: np.ndarray) -> "ManifoldState":
        return ManifoldState(self.family, self.s, complex(y[0]), complex(y[1]), complex(y[2]))


@dataclass(frozen=True)
class ConservedSet:
    N: float
    E: float
    H: float
    S: float


@dataclass
class MotionClass:
    kind: str
    details: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MOTION_KINDS:
            raise DomainError(f"unknown motion kind {self.kind!r}")


def _genfun(s: float) -> GenFunContext:
    return GenFunContext(build_sequence_table(float(s), 1))


def manifold_F(m: ManifoldState, clamp: bool = False) -> float:
    """F(x) for the state; with clamp, x >= xc maps to Fc instead of raising."""
    xc, Fc, _ = critical_constants(m.s)
    x = m.x
    if x >= xc:
        if clamp and math.isfinite(Fc):
            return Fc
        raise AdmissibilityError(f"x = {x!r} >= xc = {xc!r}")
    return F_of_x(_genfun(m.s), x)


def _weights_log(family: FamilyKind, s: float, L: int) -> np.ndarray:
    table = build_sequence_table(float(s), L)
    return table.logf if family == FamilyKind.Z else table.logg


def lift(m: ManifoldState, L: int) -> ModeState:
    xc, _, _ = critical_constants(m.s)
    if m.x >= xc:
        raise AdmissibilityError(f"cannot lift state with x = {m.x!r} >= xc")
    logw = _weights_log(m.family, m.s, L)[: L + 1]
    alpha = np.zeros(L + 1, dtype=complex)
    alpha[0] = m.b
    if m.c == 0:
        return ModeState(0.0, alpha)
    if m.p == 0:
        alpha[1] = math.exp(logw[1]) * m.c
        return ModeState(0.0, alpha)
    n = np.arange(1, L + 1)
    log_mod = logw[1:] + math.log(abs(m.c)) + (n - 1) * math.log(abs(m.p))
    phase = np.angle(m.c) + (n - 1) * np.angle(m.p)
    alpha[1:] = np.exp(log_mod + 1j * phase)
    return ModeState(0.0, alpha)


def tangent(m: ManifoldState, dm: np.ndarray, L: int) -> np.ndarray:
    """Derivative of lift along (db, dc, dp)."""
    db, dc, dp = (complex(v) for v in dm)
    logw = _weights_log(m.family, m.s, L)[: L + 1]
    out = np.zeros(L + 1, dtype=complex)
    out[0] = db
    out[1] = math.exp(logw[1]) * dc
    if L < 2:
        return out
    if m.p == 0:
        out[2] = math.exp(logw[2]) * m.c * dp
        return out
    n = np.arange(2, L + 1)
    # w_n p^(n-2) (dc p + (n-1) c dp)
    base = np.exp(logw[2:] + (n - 2) * math.log(abs(m.p)) + 1j * (n - 2) * np.angle(m.p))
    out[2:] = base * (dc * m.p + (n - 1) * m.c * dp)
    return out


def _N_E(family: FamilyKind, s: float, b: complex, c: complex, F: float) -> Tuple[float, float]:
    F_over_x = (1.0 + F) ** s
    c2 = abs(c) ** 2
    if family == FamilyKind.Z:
        D = 1.0 - (s - 1.0) * F
        N = abs(b) ** 2 + c2 * F_over_x
        E = c2 * (1.0 + F) ** (s + 1.0) / D if D > 0.0 else (0.0 if c2 == 0.0 else math.inf)
    else:
        N = abs(b) ** 2 + c2 * F_over_x * (2.0 - (s - 1.0) * F) / (s + 1.0)
        E = 2.0 * c2 * (1.0 + F) ** (s + 1.0) / (s + 1.0)
    return N, E


def reduced_rhs(m: ManifoldState, clamp: bool = False) -> np.ndarray:
    """(db/dt, dc/dt, dp/dt) on the manifold."""
    s = m.s
    b, c, p = m.b, m.c, m.p
    F = manifold_F(m, clamp=clamp)
    N, E = _N_E(m.family, s, b, c, F)
    if not math.isfinite(E):
        return np.full(3, np.nan + 0j)
    F_over_x = (1.0 + F) ** s
    g = 1.0 + F
    if m.family == FamilyKind.Z:
        DE = abs(c) ** 2 * g ** (s + 1.0)  # (1 - (s-1)F) E
        ip = (p * ((s - 1.0) * N - (s - 2.0) * DE / g)
              + np.conj(b) * c + (s - 1.0) * F_over_x * b * np.conj(c) * p * p)
        ib = b * (N + s * E / g) + s * E * g ** (s - 1.0) * c * np.conj(p)
        ic = c * (s * E + (s + 1.0) * N) + ((s - 1.0) * F - 2.0) / g * s * E * (c - b * p)
    else:
        ip = (p * (s - 1.0) * (2.0 * g * N + ((s - 1.0) * F - 2.0) * E) / (2.0 * g)
              + (s - 1.0) * F_over_x * b * np.conj(c) * p * p + np.conj(b) * c)
        ib = (b * (N + E * (2.0 * s + (s - 1.0) * F) / (2.0 * g))
              + c * np.conj(p) * (s + 1.0) * E * g ** (s - 1.0) / 2.0)
        ic = (c * ((s + 1.0) * N + (s + 1.0) * ((s - 1.0) * F - 2.0) * E / (2.0 * g))
              + b * p * (s + 1.0) ** 2 * E / (2.0 * g))
    return -1j * np.array([ib, ic, ip], dtype=complex)


def _S_value(family: FamilyKind, s: float, b, c, p, F: float, N: float, E: float) -> float:
    g = 1.0 + F
    cross = 2.0 * (b * p * np.conj(c)).real
    if family == FamilyKind.Z:
        DE = abs(c) ** 2 * g ** (s + 1.0)
        return 2.0 * s / g * (N + (F - 1.0) / g * DE + g ** s * cross)
    r = (s - 1.0) * F  # F / Fc
    return (E * (r - 2.0) * (r + 4.0 * s + 2.0) / (4.0 * g * g)
            + N * (r + 2.0 * s) / g + (s + 1.0) * g ** (s - 1.0) * cross)


def conserved_from_manifold(m: ManifoldState) -> ConservedSet:
    F = manifold_F(m)
    N, E = _N_E(m.family, m.s, m.b, m.c, F)
    S = _S_value(m.family, m.s, m.b, m.c, m.p, F, N, E)
    return ConservedSet(N=N, E=E, H=0.5 * (N * N + E * S), S=S)


def _z_quadratic(N: float, E: float, S: float, s: float) -> Tuple[float, float, float]:
    C0 = (2.0 * s * E - 2.0 * s * N + S) ** 2
    C1 = (-8.0 * (s - 1.0) * s * s * E * E + 4.0 * s * s * E * (2.0 * (s - 1.0) * N - S)
          + 2.0 * S * (S - 2.0 * s * N))
    C2 = (2.0 * (s - 1.0) * s * E + S) ** 2
    return C0, C1, C2


def potential_poly(family, N: float, E: float, S: float, s: float) -> Polynomial:
    """V(F) such that dF/dt^2 = -V(F) on the manifold."""
    family = FamilyKind(family)
    if family == FamilyKind.Z:
        C0, C1, C2 = _z_quadratic(N, E, S, s)
        prefactor = Polynomial([1.0, 1.0]) ** 2 / (4.0 * s * s)
        return prefactor * Polynomial([C0, C1, C2])
    if family != FamilyKind.Y:
        raise DomainError(f"no potential for family {family.value}")
    q = (s + 1.0) ** 2
    A = E * (2.0 * s + 1.0) - 2.0 * N * s + S
    B = E * (s - 1.0) * s + N * (3.0 * s - 1.0) - 2.0 * S
    D = E * (s - 1.0) ** 2 + 4.0 * N * (s - 1.0) - 4.0 * S
    C0 = A * A / q
    C1 = 2.0 * A * (-E * (s - 1.0) * s + N * (1.0 - 3.0 * s) + 2.0 * S) / q + 2.0 * E * (s + 1.0) * (E - N)
    C2 = B * B / q - (D * A + 2.0 * E * (s + 1.0) ** 3 * (E * (s - 1.0) + 2.0 * N)) / (2.0 * q)
    C3 = D * B / (2.0 * q)
    C4 = D * D / (16.0 * q)
    return Polynomial([C0, C1, C2, C3, C4])


def potential(family, F: float, N: float, E: float, S: float, s: float) -> float:
    return float(potential_poly(family, N, E, S, s)(F))


def F_dot(m: ManifoldState) -> float:
    """dF/dt along the reduced flow (chain rule through x)."""
    F = manifold_F(m)
    dp = reduced_rhs(m)[2]
    dx = 2.0 * (np.conj(m.p) * dp).real
    return F_prime(m.s, F) * dx


def fdot_residual(m: ManifoldState) -> float:
    cons = conserved_from_manifold(m)
    F = manifold_F(m)
    V = potential(m.family, F, cons.N, cons.E, cons.S, m.s)
    return abs(F_dot(m) ** 2 + V)


def _sign_change_roots(poly: Polynomial, lo: float, hi: float, grid: int = 2049) -> List[float]:
    xs = np.linspace(lo, hi, grid)
    vs = poly(xs)
    roots = [float(x) for x, v in zip(xs, vs) if v == 0.0]
    for i in range(grid - 1):
        if vs[i] * vs[i + 1] < 0.0:
            roots.append(brentq(poly, xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15))
    return sorted(roots)


def _real_roots(poly: Polynomial, lo: float, hi: float, vscale: float) -> List[float]:
    """Simple roots by bracketing plus touching (double) roots via critical points."""
    roots = _sign_change_roots(poly, lo, hi)
    for xcrit in _sign_change_roots(poly.deriv(), lo, hi):
        if abs(poly(xcrit)) <= 1e-9 * vscale and all(abs(xcrit - r) > 1e-7 for r in roots):
            roots.append(xcrit)
    return sorted(roots)


def cascade_S_bounds_y(N: float, E: float, s: float) -> Tuple[float, float]:
    if s <= 1.0:
        raise DomainError("Y cascades need s > 1")
    Ec = 2.0 * s * N / (s - 1.0)
    if not 0.0 < E < Ec:
        raise AdmissibilityError(f"E = {E} outside (0, Ec = {Ec})")
    Fc = 1.0 / (s - 1.0)
    base = s * (2.0 * s + 1.0) * N + (-4.0 * s * s + s + 3.0) * E / 4.0
    root = math.sqrt((s + 1.0) ** 3 / Fc * E * (Ec - E))
    pref = (s - 1.0) / (s * s)
    return pref * (base - root), pref * (base + root)


def _check_invariants(family: FamilyKind, N: float, E: float, s: float):
    if not N > 0.0:
        raise DomainError(f"N must be positive, got {N}")
    if E < 0.0:
        raise DomainError(f"E must be non-negative, got {E}")
    if family == FamilyKind.Y and s > 1.0:
        Ec = 2.0 * s * N / (s - 1.0)
        if E >= Ec:
            raise AdmissibilityError(f"E = {E} >= Ec = {Ec}")


def _allowed_intervals(poly: Polynomial, roots: List[float], lo: float, hi: float) -> List[Tuple[float, float]]:
    edges = [lo] + [r for r in roots if lo < r < hi] + [hi]
    intervals = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a and poly(0.5 * (a + b)) < 0.0:
            intervals.append((a, b))
    return intervals


def classify_motion(family, N: float, E: float, S: float, s: float,
                    tol_S: float = LAB.CLASSIFY_TOL) -> MotionClass:
    family = FamilyKind(family)
    _check_invariants(family, N, E, s)
    poly = potential_poly(family, N, E, S, s)
    vscale = max(1.0, float(np.max(np.abs(poly.coef))))
    tol = tol_S * N
    _, Fc, _ = critical_constants(s)
    hi = Fc if math.isfinite(Fc) else 1e6

    if family == FamilyKind.Z:
        if s > 1.0 and abs(S - 2.0 * (s - 1.0) * N) <= tol:
            return MotionClass("cascade_finite_T", {"V_Fc": float(poly(Fc))})
        candidates = {1: 0.0, 2: 2.0 * s * N, 3: -2.0 * (s - 1.0) * (E - N)}
        C0, C1, C2 = _z_quadratic(N, E, S, s)
        for index, S_k in candidates.items():
            if abs(S - S_k) > tol or C2 <= 0.0:
                continue
            F_star = -C1 / (2.0 * C2)
            disc = C1 * C1 - 4.0 * C0 * C2
            if 0.0 <= F_star <= hi and abs(disc) <= 1e-6 * (C1 * C1 + abs(4.0 * C0 * C2) + 1e-300):
                logger.debug(f"stationary family {index} at F* = {F_star:.6g}")
                return MotionClass("stationary", {"family": index, "F0": F_star})
        roots = _real_roots(poly, 0.0, hi, vscale)
        return MotionClass("time_periodic", {"intervals": _allowed_intervals(poly, roots, 0.0, hi)})

    if s <= 1.0:
        raise DomainError("Y classification needs s > 1")
    S_minus, S_plus = cascade_S_bounds_y(N, E, s)
    V_Fc = float(poly(Fc))
    dV_Fc = float(poly.deriv()(Fc))
    details = {"S_minus": S_minus, "S_plus": S_plus, "V_Fc": V_Fc, "dV_Fc": dV_Fc}
    if S_minus + tol < S < S_plus - tol:
        return MotionClass("cascade_finite_T", details)
    if (abs(S - S_minus) <= tol or abs(S - S_plus) <= tol) and dV_Fc > 0.0:
        return MotionClass("cascade_boundary", details)

    roots = _real_roots(poly, 0.0, Fc, vscale)
    for xcrit in _sign_change_roots(poly.deriv(), 0.0, Fc):
        if abs(poly(xcrit)) <= 1e-9 * vscale:
            details.update(F0=xcrit)
            return MotionClass("stationary", details)
    intervals = _allowed_intervals(poly, roots, 0.0, Fc)
    if not intervals:
        raise DomainError(f"no admissible motion for N={N}, E={E}, S={S}")
    details.update(intervals=intervals)
    return MotionClass("time_periodic", details)


def amplitudes_from_F(family, s: float, N: float, E: float, F: float) -> Tuple[float, float, float]:
    """(|b|^2, |c|^2, x) of the manifold state with invariants N, E at a given F."""
    family = FamilyKind(family)
    x = x_of_F(s, F)
    g = 1.0 + F
    if family == FamilyKind.Z:
        D = 1.0 - (s - 1.0) * F
        b2 = N - E * D / g
        c2 = E * D / g ** (s + 1.0)
    else:
        b2 = N - (2.0 - (s - 1.0) * F) * E / (2.0 * g)
        c2 = (s + 1.0) * E / (2.0 * g ** (s + 1.0))
    if b2 < 0.0:
        if b2 < -1e-12 * N:
            raise DomainError(f"|b|^2 = {b2} < 0 at F = {F}")
        b2 = 0.0
    return b2, max(c2, 0.0), x


def _cross_term(family: FamilyKind, s: float, N: float, E: float, S: float, F: float) -> float:
    """Re(b p conj(c)) fixed by S at a given F."""
    g = 1.0 + F
    if family == FamilyKind.Z:
        DE = E * (1.0 - (s - 1.0) * F)
        return (S * g / (2.0 * s) - N - (F - 1.0) / g * DE) / (2.0 * g ** s)
    r = (s - 1.0) * F
    rest = S - E * (r - 2.0) * (r + 4.0 * s + 2.0) / (4.0 * g * g) - N * (r + 2.0 * s) / g
    return rest / (2.0 * (s + 1.0) * g ** (s - 1.0))


def state_from_invariants(family, s: float, N: float, E: float, S: float, F: float,
                          increasing: bool = True) -> ManifoldState:
    """Manifold state with b, c real and non-negative at the given F, sign of dF/dt chosen."""
    family = FamilyKind(family)
    b2, c2, x = amplitudes_from_F(family, s, N, E, F)
    b, c, r = math.sqrt(b2), math.sqrt(c2), math.sqrt(x)
    rho = _cross_term(family, s, N, E, S, F)
    scale = b * c * r
    if scale == 0.0:
        if abs(rho) > 1e-9 * max(1.0, N):
            raise DomainError(f"invariants inconsistent at F = {F}")
        return ManifoldState(family, s, b, c, r)
    cos_phi = rho / scale
    if abs(cos_phi) > 1.0 + 1e-8:
        raise DomainError(f"V(F) > 0 at F = {F}: no state with these invariants")
    phi = math.acos(max(-1.0, min(1.0, cos_phi)))
    options = [ManifoldState(family, s, b, c, r * complex(math.cos(a), math.sin(a))) for a in (phi, -phi)]
    rates = [F_dot(m) for m in options]
    pick = int(np.argmax(rates)) if increasing else int(np.argmin(rates))
    return options[pick]


def stationary_state(family_index: int, s: float, N: float, F0: float) -> Tuple[ManifoldState, Tuple[float, float]]:
    """
    Z stationary families, b and p real at t = 0.

    :return: the state and (lambda, omega), with b ~ exp(-i lambda t), p ~ exp(-i omega t).
    """
    _, Fc, _ = critical_constants(s)
    if not 0.0 < F0 < Fc:
        raise DomainError(f"F0 = {F0} outside (0, Fc = {Fc})")
    if not N > 0.0:
        raise DomainError(f"N must be positive, got {N}")
    if family_index == 1:
        kappa, sign = 1.0 / F0, -1.0
    elif family_index == 2:
        kappa, sign = 1.0, 1.0
    elif family_index == 3:
        kappa, sign = (1.0 - (s - 1.0) * F0) / (s * F0), -1.0
    else:
        raise DomainError(f"unknown stationary family {family_index}")
    p = math.sqrt(x_of_F(s, F0))
    b = math.sqrt(N / (1.0 + kappa * kappa * F0))
    c = sign * kappa * b * p
    state = ManifoldState(FamilyKind.Z, s, b, c, p)
    E = conserved_from_manifold(state).E
    freqs = {1: (N, 0.0),
             2: (N + s * E, s * N),
             3: (N + (s - 1.0) * E, (s - 1.0) * (N - 2.0 * E))}
    return state, freqs[family_index]


def time_to_critical(family, s: float, N: float, E: float, S: float, F: float) -> float:
    """
    T - t for a state at F moving toward Fc: the integral of dF / sqrt(-V(F)) over [F, Fc].

    Endpoints where V vanishes are divided out and integrated with an
    algebraic weight.
    """
    if s <= 1.0:
        raise DomainError("no finite critical point for s = 1")
    poly = potential_poly(family, N, E, S, s)
    Fc = 1.0 / (s - 1.0)
    if not 0.0 <= F < Fc:
        raise DomainError(f"F = {F} outside [0, Fc)")
    vscale = max(1.0, float(np.max(np.abs(poly.coef))))
    # a turning point at the start is exact; Fc is a root only up to the accuracy of S
    lo_root = abs(poly(F)) <= 1e-13 * vscale
    hi_root = abs(poly(Fc)) <= 1e-10 * vscale
    g = -poly
    wvar = [0.0, 0.0]
    if hi_root:
        g = g // Polynomial([Fc, -1.0])   # -V = (Fc - u) q(u)
        wvar[1] = -0.5
    if lo_root:
        g = g // Polynomial([-F, 1.0])    # ... (u - F) q(u)
        wvar[0] = -0.5
    interior = np.linspace(F, Fc, 65)[1:-1]
    if np.any(g(interior) <= 0.0):
        raise DomainError(f"potential is not negative on ({F}, {Fc}): no cascade from F")
    integrand = lambda u: 1.0 / math.sqrt(max(g(u), 1e-300))
    if wvar == [0.0, 0.0]:
        value, _ = quad(integrand, F, Fc, epsabs=0.0, epsrel=1e-12, limit=200)
    else:
        value, _ = quad(integrand, F, Fc, weight="alg", wvar=tuple(wvar), epsabs=0.0, epsrel=1e-12, limit=200)
    return value
