"""
Integrable systems for the engine: the truncated mode system, the reduced
manifold ODE, and the phase/scaling/time-reversal symmetries of both.
"""
import math
from typing import Dict, Optional, Sequence

import numpy as np

from cascade_lab.analysis.synthesis import manifold_sobolev, profile_from_state
from cascade_lab.core.config import StopConditions
from cascade_lab.core.engine import RunRecord, System
from cascade_lab.core.errors import AdmissibilityError, DomainError
from cascade_lab.series.sequences import critical_constants
from cascade_lab.systems.couplings import CouplingFamily, FamilyKind, ModeState, fast_rhs, hamiltonian
from cascade_lab.systems.manifold import (ManifoldState, conserved_from_manifold, lift, manifold_F,
                                          reduced_rhs)

SYMMETRIES = ("phase", "scale", "time_reverse")


def sobolev_key(xi: float) -> str:
    return f"H^{xi:g}"


def mode_sobolev(alpha: np.ndarray, xi: float) -> float:
    n = np.arange(alpha.size)
    return math.sqrt(math.fsum((n + 1.0) ** (2.0 * xi) * np.abs(alpha) ** 2))


def tail_mass(alpha: np.ndarray) -> float:
    """sum_{n > 0.9 L} |alpha_n|^2 / N."""
    L = alpha.size - 1
    modsq = np.abs(alpha) ** 2
    N = float(np.sum(modsq))
    if N == 0.0:
        return 0.0
    return float(np.sum(modsq[int(math.floor(0.9 * L)) + 1:])) / N


class FullSystem(System):
    """Truncated system i d(alpha_n)/dt = sum C conj(alpha_m) alpha_k alpha_j on modes 0..L."""

    def __init__(self, fam: CouplingFamily, backend: str = "direct"):
        super().__init__()
        self.fam = fam
        self.backend = backend

    @property
    def name(self) -> str:
        return f"full[{self.fam.kind.value}, s={self.fam.s:g}, L={self.fam.L}]"

    def _rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        return fast_rhs(self.fam, y, self.backend)

    def invariants(self, y: np.ndarray) -> Dict[str, float]:
        modsq = np.abs(y) ** 2
        n = np.arange(y.size)
        return {"N": math.fsum(modsq), "E": math.fsum(n * modsq),
                "H": hamiltonian(self.fam, y, check_imag=False)}

    def observables(self, y: np.ndarray, sobolev_xi: Sequence[float]) -> Dict[str, float]:
        values = {sobolev_key(xi): mode_sobolev(y, xi) for xi in sobolev_xi}
        values["tail"] = tail_mass(y)
        return values

    def stop_reason(self, y: np.ndarray, stop: StopConditions) -> Optional[str]:
        if stop.tail_mass_max is not None and tail_mass(y) > stop.tail_mass_max:
            return "tail"
        if stop.sobolev_cap is not None and mode_sobolev(y, 1.0) > stop.sobolev_cap:
            return "sobolev_cap"
        return None


class ReducedSystem(System):
    """
    The (b, c, p) system on the Z or Y manifold.

    Steps that leave x < xc are rejected by the integrator (the right-hand
    side is NaN there for Z), so runs end on the criticality threshold.
    """

    def __init__(self, family, s: float):
        super().__init__()
        self.family = FamilyKind(family)
        self.s = float(s)
        self.xc, _, _ = critical_constants(self.s)

    @property
    def name(self) -> str:
        return f"reduced[{self.family.value}, s={self.s:g}]"

    def state(self, y: np.ndarray) -> ManifoldState:
        return ManifoldState(self.family, self.s, complex(y[0]), complex(y[1]), complex(y[2]))

    def _rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        return reduced_rhs(self.state(y), clamp=True)

    def invariants(self, y: np.ndarray) -> Dict[str, float]:
        try:
            cons = conserved_from_manifold(self.state(y))
        except AdmissibilityError:
            return {"N": math.nan, "E": math.nan, "H": math.nan, "S": math.nan}
        return {"N": cons.N, "E": cons.E, "H": cons.H, "S": cons.S}

    def observables(self, y: np.ndarray, sobolev_xi: Sequence[float]) -> Dict[str, float]:
        m = self.state(y)
        values = {"x_over_xc": m.x / self.xc}
        try:
            values["F"] = manifold_F(m)
        except AdmissibilityError:
            values["F"] = math.nan
            values.update({sobolev_key(xi): math.nan for xi in sobolev_xi})
            return values
        for xi in sobolev_xi:
            if m.p == 0:
                values[sobolev_key(xi)] = mode_sobolev(lift(m, 1).alpha, xi)
            else:
                values[sobolev_key(xi)] = manifold_sobolev(profile_from_state(m), xi)
        return values

    def stop_reason(self, y: np.ndarray, stop: StopConditions) -> Optional[str]:
        ratio = abs(complex(y[2])) ** 2 / self.xc
        if stop.x_over_xc_max is not None and ratio >= stop.x_over_xc_max:
            return "criticality"
        if stop.sobolev_cap is not None and ratio < 1.0:
            m = self.state(y)
            if m.p != 0 and manifold_sobolev(profile_from_state(m), 1.0) > stop.sobolev_cap:
                return "sobolev_cap"
        return None


def apply_symmetry(state: ModeState, kind: str, phi: float = 0.0, theta: float = 0.0,
                   eps: float = 1.0) -> ModeState:
    """
    :param kind: "phase" (alpha_n -> e^(i(phi + n theta)) alpha_n), "scale"
        (alpha_n -> eps alpha_n, t -> t / eps^2) or "time_reverse"
        (alpha_n -> conj(alpha_n), t -> -t).
    """
    if kind == "phase":
        n = np.arange(state.alpha.size)
        return ModeState(state.t, np.exp(1j * (phi + n * theta)) * state.alpha)
    if kind == "scale":
        if not eps > 0.0:
            raise DomainError(f"scale factor must be positive, got {eps}")
        return ModeState(state.t / eps ** 2, eps * state.alpha)
    if kind == "time_reverse":
        return ModeState(-state.t, np.conj(state.alpha))
    raise DomainError(f"unknown symmetry {kind!r}, expected one of {SYMMETRIES}")


def transform_record(record: RunRecord, fam: CouplingFamily, kind: str, **params) -> RunRecord:
    """
    Image of a full-system record under a symmetry, as a new record.

    Time-reversed records are re-labeled and reordered so times still increase.
    """
    images = [apply_symmetry(ModeState(t, y), kind, **params) for t, y in zip(record.times, record.states)]
    images.sort(key=lambda st: st.t)
    system = FullSystem(fam)
    out = RunRecord(system=f"{record.system} ({kind})", stop_reason=record.stop_reason)
    for image in images:
        values = dict(system.invariants(image.alpha))
        out.append(image.t, image.alpha, values)
    return out
