import logging
import math
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from cascade_lab.core.config import IntegratorConfig, StopConditions
from cascade_lab.core.errors import DomainError, StepUnderflow

logger = logging.getLogger("INTEGRATOR")

STOP_REASONS = ("t_end", "criticality", "tail", "sobolev_cap", "step_underflow")

# Dormand-Prince 5(4) tableau
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_B = np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0])
_B_LOW = np.array([5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
                   -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0])
_E = _B - _B_LOW

# PI step control (exponents for an order-5 error estimate)
_SAFETY = 0.9
_ALPHA = 0.7 / 5.0
_BETA = 0.4 / 5.0
_FAC_MIN = 0.2
_FAC_MAX = 5.0


class System(ABC):
    """
    A first-order system dy/dt = rhs(t, y) with monitored invariants.
    """
    def __init__(self):
        self.profiling_data = {"calls": 0, "time_ms": 0.0}

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @abstractmethod
    def _rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        pass

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        start_time = time.perf_counter()
        out = self._rhs(t, y)
        self.profiling_data["calls"] += 1
        self.profiling_data["time_ms"] += (time.perf_counter() - start_time) * 1000.0
        return out

    @abstractmethod
    def invariants(self, y: np.ndarray) -> Dict[str, float]:
        """At least N, E and H."""

    def observables(self, y: np.ndarray, sobolev_xi: Sequence[float]) -> Dict[str, float]:
        return {}

    def stop_reason(self, y: np.ndarray, stop: StopConditions) -> Optional[str]:
        return None


@dataclass
class RunRecord:
    """Append-only record of sampled states and time series."""
    system: str
    times: List[float] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    series: Dict[str, List[float]] = field(default_factory=dict)
    stop_reason: Optional[str] = None
    stats: Dict[str, float] = field(default_factory=lambda: {"accepted": 0, "rejected": 0})

    def append(self, t: float, y: np.ndarray, values: Dict[str, float]):
        if self.times and not t > self.times[-1]:
            raise DomainError(f"record times must increase ({t} after {self.times[-1]})")
        self.times.append(float(t))
        self.states.append(np.array(y, copy=True))
        for key, value in values.items():
            self.series.setdefault(key, []).append(float(value))

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.series[name])

    def __len__(self) -> int:
        return len(self.times)


def _error_norm(err: np.ndarray, y: np.ndarray, y_new: np.ndarray, cfg: IntegratorConfig) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


class Integrator:
    """
    Adaptive Dormand-Prince 5(4) with PI step control, first-same-as-last
    stage reuse and exact landing on requested sample times.
    """
    def __init__(self, system: System, cfg: IntegratorConfig, sobolev_xi: Sequence[float] = ()):
        self.system = system
        self.cfg = cfg
        self.sobolev_xi = tuple(sobolev_xi)

    def _sample(self, record: RunRecord, t: float, y: np.ndarray):
        values = dict(self.system.invariants(y))
        values.update(self.system.observables(y, self.sobolev_xi))
        record.append(t, y, values)

    def _initial_step(self, y: np.ndarray, f0: np.ndarray) -> float:
        cfg = self.cfg
        scale = cfg.abs_tol + cfg.rel_tol * np.abs(y)
        d0 = float(np.sqrt(np.mean((np.abs(y) / scale) ** 2)))
        d1 = float(np.sqrt(np.mean((np.abs(f0) / scale) ** 2)))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        return min(max(h0, cfg.min_step), cfg.max_step)

    def run(self, y0, t0: float = 0.0, sample_times: Optional[Sequence[float]] = None,
            raise_on_underflow: bool = False) -> RunRecord:
        """
        :param sample_times: times to record at (steps are shortened to land on
            them); without it every `stride`-th accepted step is recorded.
        :param raise_on_underflow: raise StepUnderflow instead of stopping.
        """
        cfg = self.cfg
        stop = cfg.stop
        y = np.array(y0, dtype=complex)
        if not np.all(np.isfinite(y)):
            raise DomainError("initial state is not finite")
        t = float(t0)
        t_end = stop.t_end
        targets = sorted(float(s) for s in sample_times if t0 < s <= t_end) if sample_times else []
        record = RunRecord(system=self.system.name)
        self._sample(record, t, y)

        f = self.system.rhs(t, y)
        h = self._initial_step(y, f)
        err_prev = 1.0
        accepted = 0
        target_idx = 0
        logger.info(f"{self.system.name}: integrating to t={t_end} (rtol={cfg.rel_tol:g})")

        reason = self.system.stop_reason(y, stop)
        while reason is None:
            if t >= t_end:
                reason = "t_end"
                break
            if accepted + record.stats["rejected"] >= cfg.max_steps:
                logger.warning(f"{self.system.name}: step budget exhausted at t={t}")
                reason = "step_underflow"
                break

            next_stop = targets[target_idx] if target_idx < len(targets) else t_end
            h_try = min(h, cfg.max_step)
            landing = t + h_try >= next_stop
            if landing:
                h_try = next_stop - t

            k = [f]
            for i in range(1, 7):
                yi = y + h_try * sum(a * kj for a, kj in zip(_A[i], k))
                k.append(self.system.rhs(t + _C[i] * h_try, yi))
            y_new = y + h_try * sum(b * kj for b, kj in zip(_B, k) if b != 0.0)
            if np.all(np.isfinite(y_new)) and all(np.all(np.isfinite(kj)) for kj in k):
                err = _error_norm(h_try * sum(e * kj for e, kj in zip(_E, k)), y, y_new, cfg)
            else:
                err = math.inf

            if err <= 1.0:
                t = next_stop if landing else t + h_try
                y = y_new
                f = k[6]
                accepted += 1
                record.stats["accepted"] = accepted
                factor = _SAFETY * max(err, 1e-10) ** (-_ALPHA) * err_prev ** _BETA
                factor = min(_FAC_MAX, max(_FAC_MIN, factor))
                err_prev = max(err, 1e-4)
                # a landing step shorter than proposed leaves the proposal in place
                if not (landing and h_try < h):
                    h = h_try * factor

                hit_target = landing and target_idx < len(targets) and t == targets[target_idx]
                if hit_target:
                    target_idx += 1
                reason = self.system.stop_reason(y, stop)
                if hit_target or reason is not None or t >= t_end or (not targets and accepted % cfg.stride == 0):
                    if t > record.times[-1]:
                        self._sample(record, t, y)
            else:
                record.stats["rejected"] += 1
                factor = _SAFETY * err ** (-1.0 / 5.0) if math.isfinite(err) else _FAC_MIN
                h = h_try * max(_FAC_MIN, min(1.0, factor))
                if h < cfg.min_step:
                    logger.warning(f"{self.system.name}: step underflow at t={t:.17g} (h={h:.3e})")
                    if raise_on_underflow:
                        raise StepUnderflow(t, h)
                    reason = "step_underflow"

        record.stop_reason = reason
        record.stats["rhs_calls"] = self.system.profiling_data["calls"]
        record.stats["rhs_time_ms"] = self.system.profiling_data["time_ms"]
        logger.info(f"{self.system.name}: stopped at t={t:.6g} ({reason}), "
                    f"{accepted} steps, {record.stats['rejected']} rejected")
        return record


def integrate(system: System, y0, cfg: IntegratorConfig, sample_times: Optional[Sequence[float]] = None,
              sobolev_xi: Sequence[float] = (), raise_on_underflow: bool = False) -> RunRecord:
    return Integrator(system, cfg, sobolev_xi).run(
        y0, sample_times=sample_times, raise_on_underflow=raise_on_underflow)


def conserved_drift(record: RunRecord, keys: Sequence[str] = ("N", "E", "H")) -> Dict[str, float]:
    """Max relative deviation of each invariant from its initial value."""
    if not record.times:
        raise DomainError("empty record")
    drift = {}
    for key in keys:
        values = record.column(key)
        ref = values[0]
        scale = abs(ref) if abs(ref) > 1e-300 else 1.0
        drift[key] = float(np.max(np.abs(values - ref)) / scale)
    return drift
