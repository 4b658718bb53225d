"""
Classification of Y-manifold motions over an (E, S) grid at fixed s and N.

The cascade region should be one connected set bounded by the S-(E), S+(E)
curves, with V(Fc) < 0 inside and V(Fc) > 0 outside.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
import math
from typing import Dict, List, Optional

import numpy as np
from scipy import ndimage

from cascade_lab.core.errors import DomainError
from cascade_lab.systems.couplings import FamilyKind
from cascade_lab.systems.manifold import cascade_S_bounds_y, classify_motion, potential_poly

logger = logging.getLogger("SWEEP")

INADMISSIBLE = "inadmissible"
LABELS = ("time_periodic", "stationary", "cascade_finite_T", "cascade_boundary", INADMISSIBLE)


@dataclass
class SweepResult:
    s: float
    N: float
    E: np.ndarray
    S: np.ndarray
    labels: np.ndarray        # (len(E), len(S)) motion kinds
    V_Fc: np.ndarray          # potential at Fc
    S_bounds: np.ndarray      # (len(E), 2) cascade edges

    @property
    def cascade_mask(self) -> np.ndarray:
        return self.labels == "cascade_finite_T"

    def cascade_components(self) -> int:
        _, count = ndimage.label(self.cascade_mask)
        return int(count)

    def sign_mismatches(self) -> int:
        """Cells whose classification disagrees with the sign of V(Fc)."""
        inside = self.cascade_mask
        return int(np.count_nonzero(inside & (self.V_Fc >= 0.0))
                   + np.count_nonzero(~inside & (self.V_Fc < 0.0)))

    def counts(self) -> Dict[str, int]:
        return {label: int(np.count_nonzero(self.labels == label)) for label in LABELS}

    def rows(self) -> List[Dict[str, str]]:
        out = []
        for i, E in enumerate(self.E):
            for j, S in enumerate(self.S):
                out.append({"E": f"{E:.17g}", "S": f"{S:.17g}", "classification": self.labels[i, j],
                            "V_Fc": f"{self.V_Fc[i, j]:.17g}",
                            "S_minus": f"{self.S_bounds[i, 0]:.17g}", "S_plus": f"{self.S_bounds[i, 1]:.17g}"})
        return out


def _classify_row(s: float, N: float, E: float, S_values: np.ndarray):
    Fc = 1.0 / (s - 1.0)
    labels, values = [], []
    for S in S_values:
        values.append(float(potential_poly(FamilyKind.Y, N, E, S, s)(Fc)))
        try:
            labels.append(classify_motion(FamilyKind.Y, N, E, S, s).kind)
        except DomainError:
            labels.append(INADMISSIBLE)
    return labels, values


def classification_sweep(s: float = 2.0, N: float = 2.0, n_E: int = 50, n_S: int = 50,
                         S_range: Optional[tuple] = None, threads: int = 1) -> SweepResult:
    """
    :param S_range: (S_min, S_max); by default the cascade edges over the E range plus a quarter span either side.
    :param threads: worker threads, one grid row per task.
    """
    if s <= 1.0:
        raise DomainError("the sweep needs s > 1")
    if n_E < 2 or n_S < 2:
        raise DomainError("grid needs at least 2 points per axis")
    Ec = 2.0 * s * N / (s - 1.0)
    # open interval (0, Ec)
    E_values = Ec * (np.arange(1, n_E + 1) / (n_E + 1))
    bounds = np.array([cascade_S_bounds_y(N, E, s) for E in E_values])
    if S_range is None:
        lo, hi = float(bounds[:, 0].min()), float(bounds[:, 1].max())
        margin = 0.25 * (hi - lo)
        S_range = (lo - margin, hi + margin)
    S_values = np.linspace(S_range[0], S_range[1], n_S)

    logger.info(f"sweeping {n_E}x{n_S} (E, S) cells at s={s:g}, N={N:g} on {threads} thread(s)")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda E: _classify_row(s, N, E, S_values), E_values))
    labels = np.array([r[0] for r in rows], dtype=object)
    V_Fc = np.array([r[1] for r in rows])
    result = SweepResult(s=s, N=N, E=E_values, S=S_values, labels=labels, V_Fc=V_Fc, S_bounds=bounds)
    logger.info(f"sweep done: {result.counts()}")
    return result
