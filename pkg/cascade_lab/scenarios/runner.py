"""
Scenario pipelines.

analytic  closed-form cascade sampled on a grid approaching T
reduced   (b, c, p) integration on the manifold
full      truncated mode system
compare   full system against the closed form at uniform times
"""
from dataclasses import dataclass, field, replace
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from cascade_lab.core.config import LAB
from cascade_lab.core.engine import RunRecord, conserved_drift, integrate
from cascade_lab.core.errors import DomainError, FitError
from cascade_lab.analysis.fits import estimate_blowup_time, powerlaw_fit, sobolev_exponents
from cascade_lab.analysis.observables import (SpectrumSnapshot, band_fractions, solution_position,
                                              spike_peak)
from cascade_lab.analysis.synthesis import manifold_sobolev, profile_from_invariants
from cascade_lab.scenarios import emit
from cascade_lab.scenarios.scenario import ScenarioConfig
from cascade_lab.series.sequences import critical_constants
from cascade_lab.systems.analytic import (CascadeSolution, solution_gap, solution_mode_state, solution_state,
                                          time_at_gap, y_explicit_solution, y_limit_spectrum,
                                          z_condensation_initial_data, z_condensation_solution, y_initial_data)
from cascade_lab.systems.couplings import CouplingFamily, FamilyKind, ModeState, make_family, random_state
from cascade_lab.systems.flows import FullSystem, ReducedSystem, sobolev_key
from cascade_lab.systems.manifold import (ManifoldState, MotionClass, cascade_S_bounds_y, classify_motion,
                                          conserved_from_manifold, lift, state_from_invariants,
                                          stationary_state)

logger = logging.getLogger("SCENARIO")

CASCADE_KINDS = ("cascade_finite_T", "cascade_boundary")
DRIFT_TOL = 1e-8
COMPARE_TOL = 1e-6
STATIONARY_TOL = 1e-8
BOUNDED_NORM_TOL = 1e-8
GAMMA_TOL = 0.02
Y_AMPLITUDE_TOL = 0.02
SPIKE_TOL = 0.05
SPIKE_TAU = 1e-2
# analytic runs stop at this 1 - x/xc unless the scenario sets x_over_xc_max
DEFAULT_APPROACH = 1e-8


@dataclass
class RunResult:
    config: ScenarioConfig
    record: RunRecord
    snapshots: List[SpectrumSnapshot]
    summary: Dict[str, Any]
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


# ---------------------------------------------------------------- building blocks

def build_family(cfg: ScenarioConfig) -> CouplingFamily:
    return make_family(cfg.family, cfg.s, cfg.L, cfg.beta)


def cascade_solution(cfg: ScenarioConfig) -> CascadeSolution:
    src = cfg.source
    if cfg.family == FamilyKind.Z:
        return z_condensation_solution(cfg.s, src.N, src.E)
    return y_explicit_solution(cfg.s, src.N)


def initial_manifold(cfg: ScenarioConfig) -> Optional[ManifoldState]:
    src = cfg.source
    if src.kind == "manifold":
        return ManifoldState(cfg.family, cfg.s, src.b, src.c, src.p)
    if src.kind == "analytic":
        if cfg.family == FamilyKind.Z:
            return z_condensation_initial_data(cfg.s, src.N, src.E)
        return y_initial_data(cfg.s, src.N)
    if src.kind == "stationary":
        return stationary_state(src.family_index, cfg.s, src.N, src.F0)[0]
    if src.kind == "invariants":
        S = src.S
        if S is None:
            S_minus, S_plus = cascade_S_bounds_y(src.N, src.E, cfg.s)
            S = S_minus if src.S_edge == "minus" else S_plus
        return state_from_invariants(cfg.family, cfg.s, src.N, src.E, S, src.F0)
    return None


def initial_modes(cfg: ScenarioConfig, m: Optional[ManifoldState] = None) -> ModeState:
    if m is not None:
        return lift(m, cfg.L)
    src = cfg.source
    if src.kind == "explicit":
        alpha = np.zeros(cfg.L + 1, dtype=complex)
        alpha[: len(src.alpha)] = src.alpha
        return ModeState(0.0, alpha)
    if src.kind == "random":
        return random_state(cfg.L, np.random.default_rng(cfg.seed), norm=src.N, decay=src.decay or 0.0)
    raise DomainError(f"source kind {src.kind!r} has no mode representation")


def classify(cfg: ScenarioConfig, m: Optional[ManifoldState]) -> Optional[MotionClass]:
    if m is None:
        return None
    cons = conserved_from_manifold(m)
    try:
        return classify_motion(cfg.family, cons.N, cons.E, cons.S, cfg.s)
    except DomainError as exc:
        logger.warning(f"{cfg.name}: no classification ({exc})")
        return None


def expected_sobolev_exponent(family: FamilyKind, kind: str, xi: float) -> Optional[Tuple[float, float]]:
    """(rate, tolerance) of H^xi (Z: norm, Y: squared sum), or None where no power law applies."""
    if family == FamilyKind.Z and kind == "cascade_finite_T" and xi > 0.5:
        return 2.0 * (1.0 - 2.0 * xi), 0.05
    if family == FamilyKind.Y and xi > 0.75:
        if kind == "cascade_finite_T":
            return 3.0 - 4.0 * xi, 0.1
        if kind == "cascade_boundary":
            return 6.0 - 8.0 * xi, 0.1
    return None


def _snapshot_indices(count: int, stride: int) -> List[int]:
    idx = list(range(0, count, stride))
    if idx[-1] != count - 1:
        idx.append(count - 1)
    return idx


def _fit_gamma(cfg: ScenarioConfig, snap: SpectrumSnapshot):
    out = cfg.outputs
    try:
        return powerlaw_fit(snap, n_min=out.fit_n_min, n_max=min(out.fit_n_max, snap.L),
                            corrections=out.fit_corrections)
    except (FitError, DomainError) as exc:
        logger.warning(f"{cfg.name}: no power-law fit ({exc})")
        return None


def _base_summary(cfg: ScenarioConfig, m: Optional[ManifoldState], motion: Optional[MotionClass],
                  state0: Optional[ModeState] = None) -> Dict[str, Any]:
    if m is not None:
        cons = conserved_from_manifold(m)
        N, E, S = cons.N, cons.E, cons.S
    else:
        modsq = np.abs(state0.alpha) ** 2
        N, E, S = float(np.sum(modsq)), float(np.sum(np.arange(modsq.size) * modsq)), None
    return {
        "name": cfg.name, "pipeline": cfg.pipeline, "family": cfg.family.value, "s": cfg.s,
        "N": N, "E": E, "S": S,
        "classification": motion.kind if motion else None,
        "T_estimate": None, "gamma": None, "sobolev_exponents": {}, "drift": {},
    }


def _sobolev_checks(cfg, summary, motion, checks):
    if motion is None or motion.kind not in CASCADE_KINDS:
        return
    fits = sobolev_exponents(cfg.family, cfg.s, summary["N"], summary["E"], summary["S"],
                             cfg.outputs.sobolev_xi)
    summary["sobolev_exponents"] = {f"{xi:g}": fit.exponent for xi, fit in fits.items()}
    for xi, fit in fits.items():
        expected = expected_sobolev_exponent(cfg.family, motion.kind, xi)
        if expected is not None:
            rate, tol = expected
            checks[f"sobolev_rate[{xi:g}]"] = abs(fit.exponent - rate) <= tol


def band_summary(snap: SpectrumSnapshot, bands) -> List[Dict[str, float]]:
    return [{"lo": lo, "hi": hi, "N": N_band, "E": E_band}
            for (lo, hi), (N_band, E_band) in zip(bands, band_fractions(snap, bands))]


def condensation_check(snap: SpectrumSnapshot, bands, N: float, E: float) -> Optional[bool]:
    """
    The lowest band must start at mode 0 and hold 99.9% of N; every band
    below the highest holds at most 5% of E. None when no band starts at 0.
    """
    ordered = sorted(bands)
    if ordered[0][0] != 0:
        return None
    fractions = band_fractions(snap, ordered)
    E_low = math.fsum(E_band for _, E_band in fractions[:-1])
    return fractions[0][0] >= 0.999 * N and E_low <= 0.05 * E


def _drift_checks(record: RunRecord, summary, checks, cfg: ScenarioConfig):
    drift = conserved_drift(record)
    summary["drift"] = drift
    checks["drift"] = all(v <= DRIFT_TOL for v in drift.values())
    key = sobolev_key(0.5)
    if 0.5 in cfg.outputs.sobolev_xi and key in record.series:
        values = record.column(key)
        checks["bounded_norm"] = bool(np.max(np.abs(values - values[0])) <= BOUNDED_NORM_TOL * values[0])


# ---------------------------------------------------------------- pipelines

def run_analytic(cfg: ScenarioConfig) -> RunResult:
    sol = cascade_solution(cfg)
    m0 = solution_state(sol, 0.0)
    motion = classify(cfg, m0)
    family, s = cfg.family, cfg.s
    limit = cfg.integrator.stop.x_over_xc_max
    approach = DEFAULT_APPROACH if limit is None else 1.0 - limit
    tau_stop = time_at_gap(sol, approach, remaining=True)
    tau = np.geomspace(sol.T, tau_stop, cfg.outputs.samples)
    times = sol.T - tau
    times[0] = 0.0
    logger.info(f"{cfg.name}: closed form, T = {sol.T:.12g}, sampling to T - t = {tau_stop:.3e}")

    record = RunRecord(system=f"analytic[{family.value}, s={s:g}]")
    snap_at = set(_snapshot_indices(times.size, cfg.outputs.snapshot_stride))
    snapshots = []
    Fc = sol.Fc
    for i, t in enumerate(times):
        m = solution_state(sol, t)
        d = solution_gap(sol, t)
        profile = profile_from_invariants(family, s, sol.N, sol.E, gap=d)
        cons = conserved_from_manifold(m)
        values = {"N": cons.N, "E": cons.E, "H": cons.H, "S": cons.S,
                  "x_over_xc": math.exp(-profile.mu), "F": Fc - d}
        for xi in cfg.outputs.sobolev_xi:
            values[sobolev_key(xi)] = manifold_sobolev(profile, xi)
        record.append(t, m.as_array(), values)
        if i in snap_at:
            snapshots.append(SpectrumSnapshot.from_state(solution_mode_state(sol, t, cfg.L), family, s,
                                                         mu=profile.mu))
    record.stop_reason = "criticality"

    summary = _base_summary(cfg, m0, motion)
    summary.update(N=sol.N, E=sol.E, S=sol.S, T_estimate=sol.T)
    summary["drift"] = conserved_drift(record)
    checks: Dict[str, bool] = {}
    if family == FamilyKind.Z:
        fit = _fit_gamma(cfg, snapshots[-1])
        checks["gamma"] = fit is not None and abs(fit.exponent + 1.5) <= GAMMA_TOL
        condensed = condensation_check(snapshots[-1], cfg.outputs.bands, sol.N, sol.E)
        if condensed is not None:
            checks["condensation"] = condensed
        if sol.T > SPIKE_TAU:
            peak = float(np.abs(solution_position(sol, sol.T - SPIKE_TAU, 0.0)[0]) ** 2)
            summary["spike_peak"] = peak
            checks["spike_peak"] = abs(peak / spike_peak(sol.N, sol.E) - 1.0) <= SPIKE_TOL
    else:
        n_max = max(cfg.L, cfg.outputs.fit_n_max)
        limit_snap = SpectrumSnapshot(t=sol.T, modsq=y_limit_spectrum(sol, n_max), family=family, s=s, mu=0.0)
        fit = _fit_gamma(cfg, limit_snap)
        checks["gamma"] = fit is not None and abs(fit.exponent + 2.5) <= GAMMA_TOL
        if fit is not None:
            predicted = (s + 1.0) / (2.0 * s) * sol.E * math.sqrt(sol.Ec / (math.pi * sol.N))
            summary["amplitude"] = fit.amplitude
            checks["y_amplitude"] = abs(fit.amplitude / predicted - 1.0) <= Y_AMPLITUDE_TOL
    summary["gamma"] = fit.exponent if fit is not None else None
    _sobolev_checks(cfg, summary, motion, checks)
    summary["stop_reason"] = record.stop_reason
    return RunResult(cfg, record, snapshots, summary, checks)


def _gap_series(record: RunRecord, family: FamilyKind, s: float, kind: str):
    """(times, gap, power) for blow-up time extrapolation near the end of a reduced run."""
    if family == FamilyKind.Z:
        return np.asarray(record.times), 1.0 - record.column("x_over_xc"), 4.0
    _, Fc, _ = critical_constants(s)
    power = 2.0 if kind == "cascade_boundary" else 1.0
    return np.asarray(record.times), Fc - record.column("F"), power


def run_reduced(cfg: ScenarioConfig) -> RunResult:
    m0 = initial_manifold(cfg)
    motion = classify(cfg, m0)
    system = ReducedSystem(cfg.family, cfg.s)
    record = integrate(system, m0.as_array(), cfg.integrator, sobolev_xi=cfg.outputs.sobolev_xi)
    xc, _, _ = critical_constants(cfg.s)

    snapshots = []
    for i in _snapshot_indices(len(record), cfg.outputs.snapshot_stride):
        m = system.state(record.states[i])
        if m.x >= xc:
            continue
        state = lift(m, cfg.L)
        state.t = record.times[i]
        mu = math.log(xc / m.x) if m.x > 0.0 else None
        snapshots.append(SpectrumSnapshot.from_state(state, cfg.family, cfg.s, mu=mu))

    summary = _base_summary(cfg, m0, motion)
    checks: Dict[str, bool] = {}
    _drift_checks(record, summary, checks, cfg)
    if motion is not None and motion.kind in CASCADE_KINDS and record.stop_reason == "criticality":
        times, gaps, power = _gap_series(record, cfg.family, cfg.s, motion.kind)
        tail = slice(max(0, len(times) - 10), len(times))
        try:
            summary["T_estimate"] = estimate_blowup_time(times[tail], gaps[tail], power)
        except FitError as exc:
            logger.warning(f"{cfg.name}: no blow-up time estimate ({exc})")
        if snapshots:
            fit = _fit_gamma(cfg, snapshots[-1])
            summary["gamma"] = fit.exponent if fit is not None else None
    if cfg.source.kind == "analytic":
        summary["T_exact"] = cascade_solution(cfg).T
    _sobolev_checks(cfg, summary, motion, checks)
    summary["stop_reason"] = record.stop_reason
    summary["rhs_calls"] = record.stats["rhs_calls"]
    return RunResult(cfg, record, snapshots, summary, checks)


def _integrate_full(cfg: ScenarioConfig, state0: ModeState) -> Tuple[RunRecord, List[SpectrumSnapshot]]:
    fam = build_family(cfg)
    system = FullSystem(fam)
    t_end = cfg.integrator.stop.t_end
    sample_times = np.linspace(0.0, t_end, cfg.outputs.samples)[1:].tolist()
    record = integrate(system, state0.alpha, cfg.integrator, sample_times=sample_times,
                       sobolev_xi=cfg.outputs.sobolev_xi)
    snapshots = [SpectrumSnapshot.from_state(ModeState(record.times[i], record.states[i]), cfg.family, cfg.s)
                 for i in _snapshot_indices(len(record), cfg.outputs.snapshot_stride)]
    return record, snapshots


def run_full(cfg: ScenarioConfig) -> RunResult:
    m0 = initial_manifold(cfg)
    state0 = initial_modes(cfg, m0)
    motion = classify(cfg, m0)
    record, snapshots = _integrate_full(cfg, state0)

    summary = _base_summary(cfg, m0, motion, state0)
    checks: Dict[str, bool] = {}
    _drift_checks(record, summary, checks, cfg)
    fit = _fit_gamma(cfg, snapshots[-1]) if cfg.L >= cfg.outputs.fit_n_min + 3 else None
    summary["gamma"] = fit.exponent if fit is not None else None
    if cfg.source.kind == "analytic":
        summary["T_estimate"] = cascade_solution(cfg).T
    if cfg.source.kind == "stationary":
        moduli = np.abs(np.asarray(record.states))
        deviation = float(np.max(np.abs(moduli - moduli[0])))
        summary["stationary_deviation"] = deviation
        checks["stationary"] = deviation <= STATIONARY_TOL
    summary["stop_reason"] = record.stop_reason
    summary["rhs_calls"] = record.stats["rhs_calls"]
    return RunResult(cfg, record, snapshots, summary, checks)


def trajectory_deviation(record: RunRecord, sol: CascadeSolution, L: int) -> np.ndarray:
    """max_n |alpha_n - alpha_n(exact)| / max_n |alpha_n(exact)| at each recorded time."""
    out = np.empty(len(record))
    for i, (t, alpha) in enumerate(zip(record.times, record.states)):
        exact = solution_mode_state(sol, t, L).alpha
        out[i] = float(np.max(np.abs(alpha - exact)) / np.max(np.abs(exact)))
    return out


def run_compare(cfg: ScenarioConfig) -> RunResult:
    sol = cascade_solution(cfg)
    if not cfg.integrator.stop.t_end < sol.T:
        raise DomainError(f"compare needs integrator.stop.t_end < T = {sol.T!r}")
    m0 = initial_manifold(cfg)
    motion = classify(cfg, m0)
    record, snapshots = _integrate_full(cfg, lift(m0, cfg.L))

    summary = _base_summary(cfg, m0, motion)
    summary["T_estimate"] = sol.T
    checks: Dict[str, bool] = {}
    _drift_checks(record, summary, checks, cfg)
    deviation = trajectory_deviation(record, sol, cfg.L)
    summary["max_deviation"] = float(np.max(deviation))
    checks["closed_form"] = summary["max_deviation"] <= COMPARE_TOL
    logger.info(f"{cfg.name}: max deviation from the closed form {summary['max_deviation']:.3e}")
    summary["stop_reason"] = record.stop_reason
    summary["rhs_calls"] = record.stats["rhs_calls"]
    return RunResult(cfg, record, snapshots, summary, checks)


PIPELINE_RUNNERS = {
    "analytic": run_analytic,
    "reduced": run_reduced,
    "full": run_full,
    "compare": run_compare,
}


def run_scenario(cfg: ScenarioConfig, pipeline: Optional[str] = None) -> RunResult:
    if pipeline is not None and pipeline != cfg.pipeline:
        cfg = replace(cfg, pipeline=pipeline)
    if cfg.pipeline not in PIPELINE_RUNNERS:
        raise DomainError(f"unknown pipeline {cfg.pipeline!r}")
    logger.info(f"{cfg.name}: running {cfg.pipeline} pipeline")
    result = PIPELINE_RUNNERS[cfg.pipeline](cfg)
    if result.snapshots:
        result.summary["bands"] = band_summary(result.snapshots[-1], cfg.outputs.bands)
    result.summary["checks"] = dict(result.checks)
    return result


def emit_result(result: RunResult, out_dir) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = result.config.outputs
    paths = [
        emit.write_time_series(result.record, out_dir / LAB.TIME_SERIES_FILE, out.sobolev_xi),
        emit.write_spectra(result.snapshots, out_dir / LAB.SPECTRA_FILE),
        emit.write_bands(result.snapshots, out.bands, out_dir / LAB.BANDS_FILE),
        emit.write_position(result.snapshots, out_dir / LAB.POSITION_FILE, out.theta_grid),
        emit.write_summary(result.summary, out_dir / LAB.SUMMARY_FILE),
    ]
    logger.info(f"{result.config.name}: wrote {len(paths)} files to {out_dir}")
    return paths
