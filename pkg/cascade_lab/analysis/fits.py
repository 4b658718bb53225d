"""
Least-squares fits: spectrum power laws, blow-up rates and blow-up times.
"""
import logging
import math
from typing import Dict, Optional, Sequence

import numpy as np

from cascade_lab.core.config import LAB
from cascade_lab.core.errors import DomainError, FitError
from cascade_lab.analysis.observables import FitResult, SpectrumSnapshot
from cascade_lab.analysis.synthesis import sobolev_approach
from cascade_lab.systems.couplings import FamilyKind

logger = logging.getLogger("FITS")

RATE_KINDS = ("power", "log")


def usable_window(modsq: np.ndarray, n_min: int, n_max: Optional[int] = None) -> int:
    """Largest n_max such that every entry in [n_min, n_max] clears the roundoff floor."""
    floor = LAB.FLOOR_FACTOR * np.finfo(float).eps * float(np.max(modsq))
    top = modsq.size - 1 if n_max is None else min(n_max, modsq.size - 1)
    below = np.nonzero(modsq[n_min: top + 1] <= floor)[0]
    return top if below.size == 0 else n_min + int(below[0]) - 1


def powerlaw_fit(snapshot: SpectrumSnapshot, n_min: int = LAB.FIT_N_MIN, n_max: Optional[int] = LAB.FIT_N_MAX,
                 compensate: bool = True, corrections: int = 0) -> FitResult:
    """
    log|alpha_n|^2 = log a + gamma log n + sum_{j<=k} b_j n^-j over [n_min, n_max].

    :param compensate: multiply by (xc/x)^n first (needs snapshot.mu).
    :param corrections: number k of 1/n correction terms.
    """
    if n_min < 8:
        raise DomainError(f"n_min must be >= 8, got {n_min}")
    if corrections < 0:
        raise DomainError("corrections must be >= 0")
    modsq = snapshot.modsq
    top = usable_window(modsq, n_min, n_max)
    n = np.arange(n_min, top + 1, dtype=float)
    if n.size < corrections + 3:
        raise FitError(f"only {n.size} usable modes in [{n_min}, {n_max}] for a fit with {corrections} corrections")

    y = np.log(modsq[n_min: top + 1])
    if compensate and snapshot.mu is not None:
        y = y + snapshot.mu * n
    columns = [np.ones_like(n), np.log(n)] + [n ** (-j) for j in range(1, corrections + 1)]
    design = np.column_stack(columns)
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    return FitResult(exponent=float(coef[1]), amplitude=float(math.exp(coef[0])),
                     window=(n_min, top), residual=residual, points=int(n.size),
                     corrections=tuple(float(c) for c in coef[2:]))


def blowup_rate_fit(times: Sequence[float], values: Sequence[float], T: float, kind: str = "power") -> FitResult:
    """
    power: slope of log(value) against log(T - t); log: coefficient of
    value against log(1/(T - t)). Residuals are in log(value) for both.
    """
    if kind not in RATE_KINDS:
        raise DomainError(f"unknown rate model {kind!r}")
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = (t < T) & np.isfinite(v) & (v > 0.0)
    t, v = t[keep], v[keep]
    if t.size < 3:
        raise FitError(f"need at least 3 samples before T = {T}, got {t.size}")
    log_tau = np.log(T - t)
    if np.ptp(log_tau) == 0.0:
        raise FitError("degenerate window: all samples at the same distance from T")

    design = np.column_stack([np.ones_like(log_tau), log_tau if kind == "power" else -log_tau])
    target = np.log(v) if kind == "power" else v
    coef, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    fitted = design @ coef
    if kind == "power":
        residual = float(np.sqrt(np.mean((fitted - target) ** 2)))
        amplitude = float(math.exp(coef[0]))
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            log_fit = np.log(np.where(fitted > 0.0, fitted, np.nan))
        residual = float(np.sqrt(np.nanmean((log_fit - np.log(v)) ** 2))) if np.any(fitted > 0.0) else math.inf
        amplitude = float(coef[0])
    return FitResult(exponent=float(coef[1]), amplitude=amplitude,
                     window=(float(t.min()), float(t.max())), residual=residual,
                     points=int(t.size), kind=kind)


def estimate_blowup_time(times: Sequence[float], gaps: Sequence[float], power: float) -> float:
    """
    T from gap ~ A (T - t)^power: gap^(1/power) is linear in t and vanishes at T.

    Z: 1 - x/xc with power 4; Y interior: Fc - F with power 1.
    """
    if not power > 0.0:
        raise DomainError("power must be positive")
    t = np.asarray(times, dtype=float)
    g = np.asarray(gaps, dtype=float)
    keep = np.isfinite(g) & (g > 0.0)
    if np.count_nonzero(keep) < 2:
        raise FitError("need at least 2 positive gap samples")
    root = g[keep] ** (1.0 / power)
    slope, intercept = np.polyfit(t[keep], root, 1)
    if not slope < 0.0:
        raise FitError("gap is not closing over the samples")
    return float(-intercept / slope)


def last_decade(tau: np.ndarray) -> np.ndarray:
    """Mask of samples with T - t within a factor 10 of the smallest."""
    tau = np.asarray(tau, dtype=float)
    return tau <= 10.0 * float(np.min(tau))


def sobolev_exponents(family, s: float, N: float, E: float, S: float, xi_list: Sequence[float],
                      gap_range=(1e-8, 1e-4), points: int = 41) -> Dict[float, FitResult]:
    """
    Power-law rates of H^xi along a manifold cascade, fitted over the last
    decade in T - t.

    Z rates refer to the norm, Y rates to the squared sum.
    """
    family = FamilyKind(family)
    squared = family == FamilyKind.Y
    data = sobolev_approach(family, s, N, E, S, xi_list, gap_range=gap_range, points=points, squared=squared)
    tau = data["tau"]
    mask = last_decade(tau)
    if np.count_nonzero(mask) < 5:
        logger.warning(f"only {np.count_nonzero(mask)} samples in the last decade; widen gap_range")
    out = {}
    for xi in xi_list:
        # T - t stands in for time with T = 0
        out[xi] = blowup_rate_fit(-tau[mask], data[xi][mask], 0.0, kind="power")
    return out
