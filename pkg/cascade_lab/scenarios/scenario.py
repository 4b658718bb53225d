"""
Scenario files: one TOML document per run, parsed into frozen dataclasses.

Complex numbers are written as [re, im] pairs; optional values are omitted.
"""
from dataclasses import dataclass, field, fields
import logging
import math
from pathlib import Path
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Dict, Optional, Tuple

import tomli_w

from cascade_lab.core.config import LAB, IntegratorConfig, StopConditions
from cascade_lab.core.errors import ConfigValidationError
from cascade_lab.series.sequences import critical_constants
from cascade_lab.systems.couplings import FamilyKind

logger = logging.getLogger("SCENARIO")

PIPELINES = ("analytic", "reduced", "full", "compare")
SOURCE_KINDS = ("manifold", "analytic", "explicit", "stationary", "invariants", "random")
S_EDGES = ("minus", "plus")

SCENARIO_DIR = Path(__file__).resolve().parents[2] / "scenarios"


@dataclass(frozen=True)
class SourceConfig:
    """
    Initial data. Which fields are used depends on `kind`:

    - manifold: b, c, p
    - analytic: N, E (closed-form Z condensation; the explicit Y cascade fixes E itself)
    - explicit: alpha (padded with zeros to L + 1 modes)
    - stationary: family_index, N, F0 (Z only)
    - invariants: N, E, S or S_edge, F0 (manifold state with those invariants)
    - random: N, decay (seeded)
    """
    kind: str = "analytic"
    N: Optional[float] = None
    E: Optional[float] = None
    S: Optional[float] = None
    S_edge: Optional[str] = None
    F0: Optional[float] = None
    family_index: Optional[int] = None
    decay: Optional[float] = None
    b: Optional[complex] = None
    c: Optional[complex] = None
    p: Optional[complex] = None
    alpha: Optional[Tuple[complex, ...]] = None


@dataclass(frozen=True)
class OutputConfig:
    snapshot_stride: int = 1
    sobolev_xi: Tuple[float, ...] = (0.5, 0.75, 1.0, 1.5)
    bands: Tuple[Tuple[int, int], ...] = ((0, 0), (1, 16))
    theta_grid: int = LAB.THETA_GRID
    fit_n_min: int = LAB.FIT_N_MIN
    fit_n_max: int = LAB.FIT_N_MAX
    fit_corrections: int = 1
    samples: int = 41


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    family: FamilyKind
    s: float
    L: int
    pipeline: str = "full"
    beta: float = 0.0
    seed: int = 0
    source: SourceConfig = field(default_factory=SourceConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)


# ---------------------------------------------------------------- parsing helpers

def _check_keys(data: Dict[str, Any], allowed, prefix: str):
    for key in data:
        if key not in allowed:
            raise ConfigValidationError(f"{prefix}{key}", "unknown field")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationError(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigValidationError(path, "must be finite")
    return value


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigValidationError(path, f"expected an integer, got {value!r}")
    return value


def _complex(value, path: str) -> complex:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigValidationError(path, "expected [re, im]")
    return complex(_number(value[0], f"{path}[0]"), _number(value[1], f"{path}[1]"))


def _positive(value, path: str) -> float:
    value = _number(value, path)
    if not value > 0.0:
        raise ConfigValidationError(path, "must be positive")
    return value


def _require(source: Dict[str, Any], key: str, kind: str):
    if key not in source:
        raise ConfigValidationError(f"source.{key}", f"required for source kind {kind!r}")
    return source[key]


def _require_top(data: Dict[str, Any], key: str):
    if key not in data:
        raise ConfigValidationError(key, "required")
    return data[key]


# ---------------------------------------------------------------- sections

def _parse_source(data: Dict[str, Any], family: FamilyKind, s: float, L: int) -> SourceConfig:
    _check_keys(data, {f.name for f in fields(SourceConfig)}, "source.")
    kind = data.get("kind", "analytic")
    if kind not in SOURCE_KINDS:
        raise ConfigValidationError("source.kind", f"must be one of {SOURCE_KINDS}")
    manifold_family = family in (FamilyKind.Z, FamilyKind.Y)
    values: Dict[str, Any] = {"kind": kind}

    if kind in ("manifold", "analytic", "stationary", "invariants") and not manifold_family:
        raise ConfigValidationError("source.kind", f"{kind!r} needs family Z or Y")

    if kind == "manifold":
        for key in ("b", "c", "p"):
            values[key] = _complex(_require(data, key, kind), f"source.{key}")
    elif kind == "analytic":
        if s <= 1.0:
            raise ConfigValidationError("s", "closed-form cascades need s > 1")
        values["N"] = _positive(_require(data, "N", kind), "source.N")
        if family == FamilyKind.Z:
            values["E"] = _positive(_require(data, "E", kind), "source.E")
        elif "E" in data:
            E = _positive(data["E"], "source.E")
            expected = 4.0 * values["N"] / (s + 5.0)
            if abs(E - expected) > 1e-12 * expected:
                raise ConfigValidationError("source.E", f"the explicit Y cascade has E = 4N/(s+5) = {expected!r}")
            values["E"] = E
    elif kind == "explicit":
        raw = _require(data, "alpha", kind)
        if not isinstance(raw, list) or not raw:
            raise ConfigValidationError("source.alpha", "expected a non-empty list of [re, im]")
        if len(raw) > L + 1:
            raise ConfigValidationError("source.alpha", f"{len(raw)} modes exceed L + 1 = {L + 1}")
        values["alpha"] = tuple(_complex(v, f"source.alpha[{i}]") for i, v in enumerate(raw))
    elif kind == "stationary":
        if family != FamilyKind.Z:
            raise ConfigValidationError("source.kind", "stationary families exist for Z only")
        index = _integer(_require(data, "family_index", kind), "source.family_index")
        if index not in (1, 2, 3):
            raise ConfigValidationError("source.family_index", "must be 1, 2 or 3")
        values["family_index"] = index
        values["N"] = _positive(_require(data, "N", kind), "source.N")
        values["F0"] = _positive(_require(data, "F0", kind), "source.F0")
        _, Fc, _ = critical_constants(s)
        if not values["F0"] < Fc:
            raise ConfigValidationError("source.F0", f"must lie below Fc = {Fc!r}")
    elif kind == "invariants":
        values["N"] = _positive(_require(data, "N", kind), "source.N")
        values["E"] = _positive(_require(data, "E", kind), "source.E")
        values["F0"] = _number(_require(data, "F0", kind), "source.F0")
        if ("S" in data) == ("S_edge" in data):
            raise ConfigValidationError("source.S", "give exactly one of S and S_edge")
        if "S" in data:
            values["S"] = _number(data["S"], "source.S")
        else:
            if family != FamilyKind.Y:
                raise ConfigValidationError("source.S_edge", "cascade edges S± are defined for Y")
            if data["S_edge"] not in S_EDGES:
                raise ConfigValidationError("source.S_edge", f"must be one of {S_EDGES}")
            values["S_edge"] = data["S_edge"]
    else:
        values["N"] = _positive(_require(data, "N", kind), "source.N")
        values["decay"] = _number(data.get("decay", 0.0), "source.decay")
        if values["decay"] < 0.0:
            raise ConfigValidationError("source.decay", "must be non-negative")

    extra = set(data) - set(values)
    if extra:
        raise ConfigValidationError(f"source.{sorted(extra)[0]}", f"not used by source kind {kind!r}")
    return SourceConfig(**values)


def _parse_integrator(data: Dict[str, Any]) -> IntegratorConfig:
    allowed = {f.name for f in fields(IntegratorConfig)}
    _check_keys(data, allowed, "integrator.")
    stop_data = data.get("stop", {})
    _check_keys(stop_data, {f.name for f in fields(StopConditions)}, "integrator.stop.")
    try:
        stop = StopConditions(**{k: _number(v, f"integrator.stop.{k}") for k, v in stop_data.items()})
    except ConfigValidationError as exc:
        if exc.field.startswith("integrator."):
            raise
        raise ConfigValidationError(f"integrator.{exc.field}", exc.message) from None
    values: Dict[str, Any] = {"stop": stop}
    for key, value in data.items():
        if key == "stop":
            continue
        if key in ("stride", "max_steps"):
            values[key] = _integer(value, f"integrator.{key}")
        else:
            values[key] = _number(value, f"integrator.{key}")
    return IntegratorConfig(**values)


def _parse_outputs(data: Dict[str, Any], L: int) -> OutputConfig:
    _check_keys(data, {f.name for f in fields(OutputConfig)}, "outputs.")
    defaults = OutputConfig()
    values: Dict[str, Any] = {}
    for key in ("snapshot_stride", "theta_grid", "fit_n_min", "fit_n_max", "fit_corrections", "samples"):
        values[key] = _integer(data.get(key, getattr(defaults, key)), f"outputs.{key}")
    if values["snapshot_stride"] < 1:
        raise ConfigValidationError("outputs.snapshot_stride", "must be >= 1")
    if values["theta_grid"] < 2 * L:
        raise ConfigValidationError("outputs.theta_grid", f"must be >= 2L = {2 * L}")
    if values["fit_n_min"] < 8:
        raise ConfigValidationError("outputs.fit_n_min", "must be >= 8")
    if values["fit_n_max"] <= values["fit_n_min"]:
        raise ConfigValidationError("outputs.fit_n_max", "must exceed fit_n_min")
    if values["fit_corrections"] < 0:
        raise ConfigValidationError("outputs.fit_corrections", "must be >= 0")
    if values["samples"] < 2:
        raise ConfigValidationError("outputs.samples", "must be >= 2")

    xi = data.get("sobolev_xi", list(defaults.sobolev_xi))
    if not isinstance(xi, list):
        raise ConfigValidationError("outputs.sobolev_xi", "expected a list of numbers")
    values["sobolev_xi"] = tuple(_number(v, f"outputs.sobolev_xi[{i}]") for i, v in enumerate(xi))

    bands = data.get("bands", [list(b) for b in defaults.bands])
    if not isinstance(bands, list) or not bands:
        raise ConfigValidationError("outputs.bands", "expected a non-empty list of [lo, hi]")
    parsed = []
    covered = set()
    for i, band in enumerate(bands):
        path = f"outputs.bands[{i}]"
        if not isinstance(band, list) or len(band) != 2:
            raise ConfigValidationError(path, "expected [lo, hi]")
        lo, hi = _integer(band[0], f"{path}[0]"), _integer(band[1], f"{path}[1]")
        if not 0 <= lo <= hi:
            raise ConfigValidationError(path, "empty band (need 0 <= lo <= hi)")
        if hi > L:
            raise ConfigValidationError(path, f"upper index {hi} exceeds L = {L}")
        if covered.intersection(range(lo, hi + 1)):
            raise ConfigValidationError(path, "overlaps an earlier band")
        covered.update(range(lo, hi + 1))
        parsed.append((lo, hi))
    values["bands"] = tuple(parsed)
    return OutputConfig(**values)


def parse_scenario(data: Dict[str, Any]) -> ScenarioConfig:
    """Validate a decoded TOML document; errors name the offending field."""
    allowed = {f.name for f in fields(ScenarioConfig)}
    _check_keys(data, allowed, "")
    name = data.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigValidationError("name", "expected a non-empty string")
    try:
        family = FamilyKind(data.get("family"))
    except ValueError:
        raise ConfigValidationError("family", f"must be one of {[k.value for k in FamilyKind]}") from None
    s = _number(_require_top(data, "s"), "s")
    if s < 1.0:
        raise ConfigValidationError("s", "must be >= 1")
    if family == FamilyKind.SZEGO_CUBIC and s != 1.0:
        raise ConfigValidationError("s", "the cubic Szego family has s = 1")
    L = _integer(_require_top(data, "L"), "L")
    if L < 1:
        raise ConfigValidationError("L", "must be >= 1")
    beta = _number(data.get("beta", 0.0), "beta")
    if not 0.0 <= beta <= 1.0:
        raise ConfigValidationError("beta", "must lie in [0, 1]")
    if beta != 0.0 and family != FamilyKind.BETA_Z:
        raise ConfigValidationError("beta", "only the BetaZ family is deformed")
    seed = _integer(data.get("seed", 0), "seed")
    if seed < 0:
        raise ConfigValidationError("seed", "must be >= 0")
    pipeline = data.get("pipeline", "full")
    if pipeline not in PIPELINES:
        raise ConfigValidationError("pipeline", f"must be one of {PIPELINES}")

    source = _parse_source(data.get("source", {}), family, s, L)
    if pipeline in ("analytic", "compare") and source.kind != "analytic":
        raise ConfigValidationError("source.kind", f"pipeline {pipeline!r} needs an analytic source")
    if pipeline == "reduced" and source.kind not in ("manifold", "analytic", "stationary", "invariants"):
        raise ConfigValidationError("source.kind", "the reduced pipeline needs a manifold state")

    return ScenarioConfig(name=name, family=family, s=s, L=L, pipeline=pipeline, beta=beta, seed=seed,
                          source=source, integrator=_parse_integrator(data.get("integrator", {})),
                          outputs=_parse_outputs(data.get("outputs", {}), L))


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    with open(path, "rb") as f:
        try:
            data = tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigValidationError(str(path), f"not valid TOML ({exc})") from None
    cfg = parse_scenario(data)
    logger.info(f"loaded scenario {cfg.name!r} from {path}")
    return cfg


def find_scenario(name_or_path: str) -> Path:
    """A file path, or the name of a bundled scenario (without .toml)."""
    path = Path(name_or_path)
    if path.is_file():
        return path
    bundled = SCENARIO_DIR / f"{name_or_path}.toml"
    if bundled.is_file():
        return bundled
    raise ConfigValidationError("scenario", f"no scenario file or bundled scenario named {name_or_path!r}")


# ---------------------------------------------------------------- writing

def _pair(z: complex):
    return [z.real, z.imag]


def scenario_to_dict(cfg: ScenarioConfig) -> Dict[str, Any]:
    src = {}
    for f in fields(SourceConfig):
        value = getattr(cfg.source, f.name)
        if value is None:
            continue
        if f.name in ("b", "c", "p"):
            value = _pair(value)
        elif f.name == "alpha":
            value = [_pair(v) for v in value]
        src[f.name] = value
    stop = {f.name: getattr(cfg.integrator.stop, f.name) for f in fields(StopConditions)
            if getattr(cfg.integrator.stop, f.name) is not None}
    integ = {f.name: getattr(cfg.integrator, f.name) for f in fields(IntegratorConfig) if f.name != "stop"}
    integ["stop"] = stop
    out = {f.name: getattr(cfg.outputs, f.name) for f in fields(OutputConfig)}
    out["sobolev_xi"] = list(out["sobolev_xi"])
    out["bands"] = [list(b) for b in out["bands"]]
    return {
        "name": cfg.name, "family": cfg.family.value, "s": cfg.s, "L": cfg.L,
        "pipeline": cfg.pipeline, "beta": cfg.beta, "seed": cfg.seed,
        "source": src, "integrator": integ, "outputs": out,
    }


def dump_scenario(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(scenario_to_dict(cfg))


def save_scenario(cfg: ScenarioConfig, path):
    with open(path, "wb") as f:
        tomli_w.dump(scenario_to_dict(cfg), f)
