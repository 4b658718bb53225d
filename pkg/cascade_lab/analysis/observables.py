"""
Diagnostics of mode states: conserved quantities, Sobolev norms, band
partial sums and position-space profiles.
"""
from dataclasses import dataclass, field
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gamma

from cascade_lab.core.config import LAB
from cascade_lab.core.errors import AliasingError, DomainError
from cascade_lab.series.genfun import criticality_gap
from cascade_lab.analysis.synthesis import manifold_u
from cascade_lab.systems.analytic import CascadeSolution, solution_gap, solution_state, y_state
from cascade_lab.systems.couplings import CouplingFamily, FamilyKind, ModeState, hamiltonian
from cascade_lab.systems.manifold import ManifoldState

_DIRECT_CHUNK = 256


@dataclass(frozen=True, eq=False)
class SpectrumSnapshot:
    """
    |alpha_n|^2 at one time, with the complex modes when known.

    :param mu: log(xc/x) for manifold snapshots; enables geometric compensation in fits.
    """
    t: float
    modsq: np.ndarray
    family: FamilyKind
    s: float
    alpha: Optional[np.ndarray] = None
    mu: Optional[float] = None

    def __post_init__(self):
        modsq = np.array(self.modsq, dtype=float)
        if modsq.ndim != 1 or modsq.size < 2:
            raise DomainError("snapshot needs |alpha_n|^2 for n = 0..L, L >= 1")
        if np.any(modsq < 0.0) or not np.all(np.isfinite(modsq)):
            raise DomainError("snapshot entries must be finite and non-negative")
        modsq.setflags(write=False)
        object.__setattr__(self, "modsq", modsq)
        object.__setattr__(self, "family", FamilyKind(self.family))

    @property
    def L(self) -> int:
        return self.modsq.size - 1

    @classmethod
    def from_state(cls, state: ModeState, family, s: float, mu: Optional[float] = None) -> "SpectrumSnapshot":
        alpha = np.array(state.alpha, dtype=complex)
        return cls(t=state.t, modsq=np.abs(alpha) ** 2, family=family, s=s, alpha=alpha, mu=mu)


@dataclass(frozen=True)
class FitResult:
    """
    :param window: (n_min, n_max) for spectrum fits, (t_min, t_max) for rate fits.
    :param residual: RMS residual in log coordinates.
    :param corrections: coefficients of n^-1, n^-2, ... when fitted.
    """
    exponent: float
    amplitude: float
    window: Tuple[float, float]
    residual: float
    points: int
    kind: str = "power"
    corrections: Tuple[float, ...] = field(default_factory=tuple)


def _alpha_of(data: Union[ModeState, SpectrumSnapshot, np.ndarray]) -> np.ndarray:
    if isinstance(data, ModeState):
        return data.alpha
    if isinstance(data, SpectrumSnapshot):
        if data.alpha is None:
            raise DomainError("snapshot has no phases; complex modes are required here")
        return data.alpha
    return np.asarray(data, dtype=complex)


def _modsq_of(data) -> np.ndarray:
    if isinstance(data, SpectrumSnapshot):
        return data.modsq
    return np.abs(_alpha_of(data)) ** 2


def conserved(data, fam: CouplingFamily) -> Tuple[float, float, float]:
    """(N, E, H) of a mode state or a snapshot carrying phases."""
    alpha = _alpha_of(data)
    modsq = np.abs(alpha) ** 2
    n = np.arange(alpha.size)
    return math.fsum(modsq), math.fsum(n * modsq), hamiltonian(fam, alpha)


def sobolev(data, xi: float, squared: bool = False) -> float:
    """(sum (n+1)^(2 xi) |alpha_n|^2)^(1/2)."""
    modsq = _modsq_of(data)
    n = np.arange(modsq.size)
    value = math.fsum((n + 1.0) ** (2.0 * xi) * modsq)
    return value if squared else math.sqrt(value)


def band_fractions(data, bands: Sequence[Tuple[int, int]]) -> List[Tuple[float, float]]:
    """
    (N_band, E_band) per inclusive index range (lo, hi).

    Ranges must not overlap; modes outside every band are simply not counted.
    """
    modsq = _modsq_of(data)
    L = modsq.size - 1
    covered = np.zeros(L + 1, dtype=bool)
    out = []
    for i, (lo, hi) in enumerate(bands):
        if not 0 <= lo <= hi <= L:
            raise DomainError(f"band {i} = ({lo}, {hi}) is not a range inside [0, {L}]")
        if np.any(covered[lo: hi + 1]):
            raise DomainError(f"band {i} = ({lo}, {hi}) overlaps an earlier band")
        covered[lo: hi + 1] = True
        n = np.arange(lo, hi + 1)
        part = modsq[lo: hi + 1]
        out.append((math.fsum(part), math.fsum(n * part)))
    return out


def theta_grid(n_theta: int = LAB.THETA_GRID) -> np.ndarray:
    return 2.0 * math.pi * np.arange(n_theta) / n_theta


def position_space(data, n_theta: int = LAB.THETA_GRID) -> Tuple[np.ndarray, np.ndarray]:
    """
    u(theta_j) = sum_n alpha_n e^(i n theta_j) on theta_j = 2 pi j / n_theta.

    :raises AliasingError: if n_theta < 2L.
    """
    alpha = _alpha_of(data)
    L = alpha.size - 1
    if n_theta < 2 * L:
        raise AliasingError(f"theta grid of {n_theta} points cannot resolve L = {L} (need >= {2 * L})")
    padded = np.zeros(n_theta, dtype=complex)
    padded[: L + 1] = alpha
    return theta_grid(n_theta), n_theta * np.fft.ifft(padded)


def position_derivative(data, n_theta: int = LAB.THETA_GRID) -> Tuple[np.ndarray, np.ndarray]:
    """d u / d theta on the same grid as position_space."""
    alpha = _alpha_of(data)
    n = np.arange(alpha.size)
    return position_space(1j * n * alpha, n_theta)


def position_at(data, theta) -> np.ndarray:
    """Direct summation at arbitrary angles (for windows around a focus point)."""
    alpha = _alpha_of(data)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    n = np.arange(alpha.size)
    out = np.empty(theta.size, dtype=complex)
    for start in range(0, theta.size, _DIRECT_CHUNK):
        block = theta[start: start + _DIRECT_CHUNK]
        out[start: start + block.size] = np.exp(1j * np.outer(block, n)) @ alpha
    return out


def grid_norms(data, n_theta: int = LAB.THETA_GRID) -> Tuple[float, float]:
    """Grid quadratures (1/2pi) int |u|^2 and (1/2pi) int |u'|^2, equal to N and sum n^2 |alpha_n|^2."""
    _, u = position_space(data, n_theta)
    _, du = position_derivative(data, n_theta)
    return float(np.mean(np.abs(u) ** 2)), float(np.mean(np.abs(du) ** 2))


def spike_constant(s: float, N: float, E: float) -> float:
    return 4.0 / (s * (s - 1.0) * E * E * N * N)


def spike_profile_z(s: float, N: float, E: float, T: float, t: float, theta_rel) -> np.ndarray:
    """Self-similar |u|^2 near the focus point of the Z condensation cascade."""
    tau = T - t
    if not tau > 0.0:
        raise DomainError("spike profile needs t < T")
    theta_rel = np.asarray(theta_rel, dtype=float)
    C = spike_constant(s, N, E)
    amp = (2.0 / math.pi) ** 0.25 * gamma(0.25) * math.sqrt(E)
    u = math.sqrt(N) + 1j * amp * (1.0 - 1j * C * theta_rel / tau ** 4) ** (-0.25)
    return np.abs(u) ** 2


def spike_peak(N: float, E: float) -> float:
    """Limit of |u|^2 at the focus point as t -> T."""
    return N + math.sqrt(2.0 / math.pi) * gamma(0.25) ** 2 * E


def manifold_position(m: ManifoldState, theta_rel, mu: Optional[float] = None) -> np.ndarray:
    """u at angles measured from the focus point -arg(p), every mode included."""
    return manifold_u(m, theta_rel, mu=mu, relative=True)


def solution_position(sol: CascadeSolution, t: float, theta_rel) -> np.ndarray:
    """u(t) of a closed-form cascade at angles relative to the focus point."""
    d = solution_gap(sol, t)
    mu = criticality_gap(sol.s, sol.Fc - d, gap=d)
    return manifold_position(solution_state(sol, t), theta_rel, mu=mu)


def cusp_profile_y(sol: CascadeSolution, theta, relative: bool = False,
                   head: int = LAB.TAIL_HEAD, tail: bool = True) -> np.ndarray:
    """|u(T, theta)|^2 for a Y cascade, summed to infinity through the n^(-5/4) tail."""
    if sol.family != FamilyKind.Y:
        raise DomainError("cusp profile needs a Y cascade solution")
    m = y_state(sol, sol.T)
    return np.abs(manifold_u(m, theta, mu=0.0, head=head, tail=tail, relative=relative)) ** 2


def cusp_angle(sol: CascadeSolution) -> float:
    """theta* = -arg p(T) reduced to [0, 2 pi)."""
    m = y_state(sol, sol.T)
    return float(np.mod(-np.angle(m.p), 2.0 * math.pi))
