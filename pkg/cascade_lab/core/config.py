from dataclasses import dataclass, field
from typing import Optional

from cascade_lab.core.errors import ConfigValidationError


@dataclass(frozen=True)
class LabConfig:
    """Global numerical constants."""
    SERIES_TOL: float = 1e-15
    NEWTON_TOL: float = 1e-15

    # Knife-edge conditions (S = 2(s-1)N, S = S±) are tested relative to N
    CLASSIFY_TOL: float = 1e-9

    THETA_GRID: int = 4096
    # Exact head length for tail-accelerated manifold sums
    TAIL_HEAD: int = 4096
    FIT_N_MIN: int = 32
    FIT_N_MAX: int = 200
    # Usable spectrum entries must exceed this multiple of the roundoff floor
    FLOOR_FACTOR: float = 1e3

    CSV_DIGITS: int = 17
    TIME_SERIES_FILE: str = "timeseries.csv"
    SPECTRA_FILE: str = "spectra.csv"
    BANDS_FILE: str = "bands.csv"
    POSITION_FILE: str = "position.csv"
    SUMMARY_FILE: str = "summary.json"


LAB = LabConfig()


@dataclass(frozen=True)
class StopConditions:
    """
    Termination criteria checked after every accepted step.

    :param t_end: final time.
    :param x_over_xc_max: criticality threshold for |p|^2/xc (manifold runs).
    :param tail_mass_max: threshold on sum_{n>0.9L} |alpha_n|^2 / N (full runs).
    :param sobolev_cap: optional cap on H^1.
    """
    t_end: float = 1.0
    x_over_xc_max: Optional[float] = None
    tail_mass_max: Optional[float] = None
    sobolev_cap: Optional[float] = None

    def __post_init__(self):
        if not self.t_end > 0.0:
            raise ConfigValidationError("stop.t_end", "must be positive")
        for name in ("x_over_xc_max", "tail_mass_max"):
            value = getattr(self, name)
            if value is not None and not 0.0 < value < 1.0:
                raise ConfigValidationError(f"stop.{name}", "must lie in (0, 1)")
        if self.sobolev_cap is not None and not self.sobolev_cap > 0.0:
            raise ConfigValidationError("stop.sobolev_cap", "must be positive")


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_step: float = 0.05
    min_step: float = 1e-12
    stop: StopConditions = field(default_factory=StopConditions)
    # Record every `stride`-th accepted step when no sample times are given
    stride: int = 1
    max_steps: int = 2_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            value = getattr(self, name)
            if not 0.0 < value <= 1e-3:
                raise ConfigValidationError(f"integrator.{name}", "must lie in (0, 1e-3]")
        if not 0.0 < self.min_step <= self.max_step:
            raise ConfigValidationError("integrator.min_step", "need 0 < min_step <= max_step")
        if self.stride < 1:
            raise ConfigValidationError("integrator.stride", "must be >= 1")
