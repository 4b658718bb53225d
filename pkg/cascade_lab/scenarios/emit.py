import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from cascade_lab.core.config import LAB
from cascade_lab.core.engine import RunRecord
from cascade_lab.analysis.observables import SpectrumSnapshot, band_fractions, position_space
from cascade_lab.systems.flows import sobolev_key

logger = logging.getLogger("SCENARIO")

TIME_SERIES_BASE = ("t", "N", "E", "H")
TIME_SERIES_TAIL = ("x_over_xc", "F")
SPECTRUM_COLUMNS = ("t", "n", "modsq", "phase")
BAND_COLUMNS = ("t", "lo", "hi", "N_band", "E_band")
POSITION_COLUMNS = ("t", "theta", "re_u", "im_u")


def fmt(value) -> str:
    """Fixed 17-significant-digit text so identical runs give identical files."""
    if value is None:
        return "nan"
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.{LAB.CSV_DIGITS}g}"


def _write_rows(path: Path, columns: Sequence[str], rows: Iterable[Dict[str, str]]) -> Path:
    try:
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(columns))
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        logger.error(f"cannot write {path}: {exc}")
        raise
    return path


def time_series_columns(sobolev_xi: Sequence[float]) -> List[str]:
    return list(TIME_SERIES_BASE) + [sobolev_key(xi) for xi in sobolev_xi] + list(TIME_SERIES_TAIL)


def write_time_series(record: RunRecord, path, sobolev_xi: Sequence[float]) -> Path:
    if not len(record):
        raise ValueError("cannot emit an empty record")
    columns = time_series_columns(sobolev_xi)

    def rows():
        for i, t in enumerate(record.times):
            row = {"t": fmt(t)}
            for key in columns[1:]:
                series = record.series.get(key)
                row[key] = fmt(series[i] if series is not None else None)
            yield row

    return _write_rows(Path(path), columns, rows())


def write_spectra(snapshots: Sequence[SpectrumSnapshot], path) -> Path:
    def rows():
        for snap in snapshots:
            phase = np.angle(snap.alpha) if snap.alpha is not None else None
            for n, value in enumerate(snap.modsq):
                yield {"t": fmt(snap.t), "n": str(n), "modsq": fmt(value),
                       "phase": fmt(phase[n] if phase is not None else None)}

    return _write_rows(Path(path), SPECTRUM_COLUMNS, rows())


def write_bands(snapshots: Sequence[SpectrumSnapshot], bands: Sequence[Tuple[int, int]], path) -> Path:
    """(N_band, E_band) of every configured band at every snapshot."""
    def rows():
        for snap in snapshots:
            for (lo, hi), (N_band, E_band) in zip(bands, band_fractions(snap, bands)):
                yield {"t": fmt(snap.t), "lo": str(lo), "hi": str(hi), "N_band": fmt(N_band), "E_band": fmt(E_band)}

    return _write_rows(Path(path), BAND_COLUMNS, rows())


def write_position(snapshots: Sequence[SpectrumSnapshot], path, n_theta: int = LAB.THETA_GRID) -> Path:
    """u(theta) on the uniform grid for every snapshot that carries phases."""
    def rows():
        for snap in snapshots:
            if snap.alpha is None:
                continue
            theta, u = position_space(snap, n_theta)
            for th, value in zip(theta, u):
                yield {"t": fmt(snap.t), "theta": fmt(th), "re_u": fmt(value.real), "im_u": fmt(value.imag)}

    return _write_rows(Path(path), POSITION_COLUMNS, rows())


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_summary(summary: Dict[str, Any], path) -> Path:
    path = Path(path)
    try:
        with open(path, "w") as f:
            json.dump(_jsonable(summary), f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        logger.error(f"cannot write {path}: {exc}")
        raise
    return path
