"""
Resonant quartic systems i d(alpha_n)/dt = sum C_nmkj conj(alpha_m) alpha_k alpha_j,
n + m = k + j, truncated to modes 0..L.

Every supported coupling factorizes as C_nmkj = u_n u_m u_k u_j K_{n+m}
(restricted to n*m*k*j = 0 for the sparse families), which turns the
right-hand side into one convolution and one correlation.
"""
from dataclasses import dataclass
from enum import Enum
import math
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from cascade_lab.core.errors import DomainError, ResonanceError
from cascade_lab.series.sequences import SequenceTable, build_sequence_table


class FamilyKind(str, Enum):
    Z = "Z"
    Y = "Y"
    SZEGO_CUBIC = "SzegoCubic"
    BETA_Z = "BetaZ"


@dataclass(frozen=True, eq=False)
class CouplingFamily:
    """
    :param u: per-mode factors u_0..u_L.
    :param K: pair factors K_0..K_2L.
    """
    kind: FamilyKind
    s: float
    beta: float
    table: SequenceTable
    u: np.ndarray
    K: np.ndarray

    @property
    def L(self) -> int:
        return self.table.L

    @property
    def sparse(self) -> bool:
        return self.kind == FamilyKind.Y


def make_family(kind, s: float, L: int, beta: float = 0.0) -> CouplingFamily:
    kind = FamilyKind(kind)
    if L < 1:
        raise DomainError(f"L must be >= 1, got {L}")
    if kind == FamilyKind.SZEGO_CUBIC:
        s = 1.0
    if kind != FamilyKind.BETA_Z:
        beta = 0.0
    table = build_sequence_table(float(s), L)
    M = np.arange(2 * L + 1)
    h2_inv = np.exp(-2.0 * table.logh)
    if kind == FamilyKind.Y:
        d = np.sqrt((s - 1.0) * M[: L + 1] + 2.0)
        u = d * np.exp(table.logh[: L + 1])
        K = 0.25 * h2_inv
    else:
        u = np.exp(table.logh[: L + 1])
        K = ((s - 1.0) * M / 2.0 + 1.0) * h2_inv
    return CouplingFamily(kind=kind, s=float(s), beta=float(beta), table=table, u=u, K=K)


def coupling(fam: CouplingFamily, n: int, m: int, k: int, j: int) -> float:
    if n + m != k + j:
        raise ResonanceError(f"off-resonant indices ({n}, {m}, {k}, {j})")
    if min(n, m, k, j) < 0 or max(n, m, k, j) > fam.L:
        raise DomainError(f"indices ({n}, {m}, {k}, {j}) outside [0, {fam.L}]")
    if fam.kind == FamilyKind.SZEGO_CUBIC:
        return 1.0
    idx = (n, m, k, j)
    sparse_hit = n * m * k * j == 0
    if fam.kind == FamilyKind.Y and not sparse_hit:
        return 0.0

    s = fam.s
    logf = fam.table.logf
    # fsum is correctly rounded, so index permutations give identical values
    log_value = math.fsum([logf[i] for i in idx] + [-2.0 * logf[n + m]])
    if fam.kind == FamilyKind.Y:
        log_value += 0.5 * math.fsum(math.log((s - 1.0) * i + 2.0) for i in idx)
        return 0.25 * math.exp(log_value)

    value = ((s - 1.0) * (n + m) / 2.0 + 1.0) * math.exp(log_value)
    if fam.kind == FamilyKind.BETA_Z and not sparse_hit:
        value *= 1.0 - fam.beta
    return value


def coupling_array(fam: CouplingFamily, n, m, k, j) -> np.ndarray:
    """Vectorized coupling over resonant index arrays (no resonance check)."""
    n, m, k, j = (np.asarray(a) for a in (n, m, k, j))
    s = fam.s
    logf = fam.table.logf
    log_value = logf[n] + logf[m] + logf[k] + logf[j] - 2.0 * logf[n + m]
    sparse_hit = (n * m * k * j) == 0
    if fam.kind == FamilyKind.Y:
        d2 = ((s - 1.0) * n + 2.0) * ((s - 1.0) * m + 2.0) * ((s - 1.0) * k + 2.0) * ((s - 1.0) * j + 2.0)
        return np.where(sparse_hit, 0.25 * np.sqrt(d2) * np.exp(log_value), 0.0)
    value = ((s - 1.0) * (n + m) / 2.0 + 1.0) * np.exp(log_value)
    if fam.kind == FamilyKind.BETA_Z:
        value = np.where(sparse_hit, value, (1.0 - fam.beta) * value)
    return value


@dataclass
class ModeState:
    t: float
    alpha: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=complex)
        if self.alpha.ndim != 1 or self.alpha.size < 2:
            raise DomainError("mode state needs alpha_0..alpha_L with L >= 1")
        if not np.all(np.isfinite(self.alpha)):
            raise DomainError("mode state has non-finite entries")

    @property
    def L(self) -> int:
        return self.alpha.size - 1

    def copy(self) -> "ModeState":
        return ModeState(self.t, self.alpha.copy())


def _as_alpha(fam: CouplingFamily, state) -> np.ndarray:
    alpha = state.alpha if isinstance(state, ModeState) else np.asarray(state, dtype=complex)
    if alpha.size != fam.L + 1:
        raise DomainError(f"state has {alpha.size} modes, family truncation is L = {fam.L}")
    return alpha


def dense_rhs(fam: CouplingFamily, state) -> np.ndarray:
    """Reference evaluation over every resonant (n, m, k) with j = n + m - k."""
    alpha = _as_alpha(fam, state)
    L = fam.L
    n, m, k = np.meshgrid(np.arange(L + 1), np.arange(L + 1), np.arange(L + 1), indexing="ij")
    j = n + m - k
    valid = (j >= 0) & (j <= L)
    j_safe = np.where(valid, j, 0)
    C = np.where(valid, coupling_array(fam, n, m, k, j_safe), 0.0)
    terms = C * np.conj(alpha[m]) * alpha[k] * alpha[j_safe]
    return -1j * terms.sum(axis=(1, 2))


def _pair_sums(v: np.ndarray, backend: str) -> np.ndarray:
    if backend == "fft":
        return fftconvolve(v, v)
    return np.convolve(v, v)


def _correlate(a: np.ndarray, v: np.ndarray, backend: str) -> np.ndarray:
    # out[n] = sum_m a[n + m] conj(v[m])
    if backend == "fft":
        return fftconvolve(a, np.conj(v)[::-1], mode="valid")
    return np.correlate(a, v, mode="valid")


def _full_layer(u, K, alpha, backend):
    v = u * alpha
    W = _pair_sums(v, backend)
    return u * _correlate(K * W, v, backend), W


def _sparse_layer(u, K, alpha, backend):
    """Same sum restricted to n*m*k*j = 0, each quadruple counted once."""
    L = alpha.size - 1
    v = u * alpha
    W = _pair_sums(v, backend)
    Q = K * W
    R = np.empty(L + 1, dtype=complex)
    R[0] = _correlate(Q, v, backend)[0]

    # n >= 1: either m = 0 (k + j = n free) or one of k, j vanishes (factor 2)
    z = np.zeros(2 * L + 1, dtype=complex)
    z[: L + 1] = v * K[: L + 1]
    cross = _correlate(z, v, backend)[1:] - z[1: L + 1] * np.conj(v[0])
    R[1:] = np.conj(v[0]) * Q[1: L + 1] + 2.0 * v[0] * cross
    return u * R


def fast_rhs(fam: CouplingFamily, state, backend: str = "direct") -> np.ndarray:
    """
    O(L^2) evaluation (O(L log L) with backend="fft").

    :param backend: "direct" (numpy convolve/correlate) or "fft".
    """
    if backend not in ("direct", "fft"):
        raise DomainError(f"unknown backend {backend!r}")
    alpha = _as_alpha(fam, state)
    if fam.kind == FamilyKind.Y:
        return -1j * _sparse_layer(fam.u, fam.K, alpha, backend)
    full, _ = _full_layer(fam.u, fam.K, alpha, backend)
    if fam.kind == FamilyKind.BETA_Z and fam.beta != 0.0:
        sparse = _sparse_layer(fam.u, fam.K, alpha, backend)
        return -1j * ((1.0 - fam.beta) * full + fam.beta * sparse)
    return -1j * full


def hamiltonian(fam: CouplingFamily, state, check_imag: bool = True) -> float:
    """H = 1/2 sum C conj(alpha_n alpha_m) alpha_k alpha_j."""
    alpha = _as_alpha(fam, state)
    if fam.kind in (FamilyKind.Z, FamilyKind.SZEGO_CUBIC):
        W = np.convolve(fam.u * alpha, fam.u * alpha)
        return 0.5 * float(np.sum(fam.K * np.abs(W) ** 2))
    value = 0.5 * np.sum(np.conj(alpha) * (1j * fast_rhs(fam, alpha)))
    if check_imag and abs(value.imag) > 1e-12 * max(1.0, abs(value.real)):
        raise DomainError(f"hamiltonian has imaginary part {value.imag:.3e}")
    return float(value.real)


def random_state(L: int, rng: np.random.Generator, norm: Optional[float] = 1.0,
                 decay: float = 0.0) -> ModeState:
    """Gaussian random amplitudes, optionally damped by exp(-decay*n) and normalized to N = norm."""
    n = np.arange(L + 1)
    alpha = (rng.standard_normal(L + 1) + 1j * rng.standard_normal(L + 1)) * np.exp(-decay * n)
    if norm is not None:
        alpha *= math.sqrt(norm / float(np.sum(np.abs(alpha) ** 2)))
    return ModeState(0.0, alpha)
