import csv
import json
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from cascade_lab.analysis.observables import SpectrumSnapshot
from cascade_lab.core.config import LAB
from cascade_lab.core.errors import DomainError
from cascade_lab.scenarios.emit import fmt, time_series_columns
from cascade_lab.scenarios.runner import (condensation_check, emit_result, expected_sobolev_exponent, initial_modes,
                                          run_scenario, trajectory_deviation)
from cascade_lab.scenarios.scenario import find_scenario, load_scenario, parse_scenario
from cascade_lab.systems.analytic import y_explicit_solution
from cascade_lab.systems.couplings import FamilyKind

def stationary_config(L=64, t_end=2.0):
    return parse_scenario({
        "name": "stationary_small", "family": "Z", "s": 2.0, "L": L, "pipeline": "full",
        "source": {"kind": "stationary", "family_index": 2, "N": 1.0, "F0": 0.3},
        "integrator": {"stop": {"t_end": t_end}},
        "outputs": {"samples": 5, "theta_grid": 128, "bands": [[0, 0], [1, 8]]},
    })

class TestPipelines(unittest.TestCase):
    def test_expected_rates(self):
        self.assertEqual(expected_sobolev_exponent(FamilyKind.Z, "cascade_finite_T", 1.0), (-2.0, 0.05))
        self.assertEqual(expected_sobolev_exponent(FamilyKind.Y, "cascade_finite_T", 1.0), (-1.0, 0.1))
        self.assertEqual(expected_sobolev_exponent(FamilyKind.Y, "cascade_boundary", 1.0), (-2.0, 0.1))
        self.assertIsNone(expected_sobolev_exponent(FamilyKind.Z, "cascade_finite_T", 0.5))
        self.assertIsNone(expected_sobolev_exponent(FamilyKind.Z, "time_periodic", 1.0))

    def test_condensation_uses_configured_bands(self):
        modsq = np.zeros(33)
        modsq[0], modsq[20] = 0.9995, 0.0005
        condensed = SpectrumSnapshot(t=0.0, modsq=modsq, family="Z", s=2.0)
        self.assertTrue(condensation_check(condensed, [(0, 0), (1, 16), (17, 32)], 1.0, 0.01))
        # mode 20 is no longer in the top band
        self.assertFalse(condensation_check(condensed, [(0, 0), (1, 24), (25, 32)], 1.0, 0.01))
        self.assertIsNone(condensation_check(condensed, [(1, 32)], 1.0, 0.01))
        two_mode = SpectrumSnapshot(t=0.0, modsq=[0.5, 0.5, 0.0], family="Z", s=2.0)
        self.assertFalse(condensation_check(two_mode, [(0, 0), (1, 2)], 1.0, 0.5))

    def test_stationary_full_run(self):
        result = run_scenario(stationary_config())
        self.assertEqual(result.record.stop_reason, "t_end")
        self.assertTrue(result.checks["stationary"])
        self.assertTrue(result.checks["drift"])
        self.assertTrue(result.checks["bounded_norm"])
        self.assertEqual(result.summary["checks"], result.checks)
        self.assertEqual(len(result.record), 5)

    def test_random_source_is_seeded(self):
        cfg = parse_scenario({"name": "noise", "family": "SzegoCubic", "s": 1.0, "L": 16, "seed": 4,
                              "source": {"kind": "random", "N": 1.0, "decay": 0.2}})
        first = initial_modes(cfg).alpha
        np.testing.assert_array_equal(first, initial_modes(cfg).alpha)
        self.assertAlmostEqual(float(np.sum(np.abs(first) ** 2)), 1.0, places=12)

    def test_z_condensation_closed_form(self):
        result = run_scenario(load_scenario(find_scenario("z_condensation")))
        self.assertAlmostEqual(result.summary["T_estimate"], math.pi / math.sqrt(2.0), places=12)
        self.assertEqual(result.summary["classification"], "cascade_finite_T")
        self.assertTrue(result.checks["gamma"])
        self.assertTrue(result.checks["condensation"])
        self.assertTrue(result.checks["sobolev_rate[1]"])
        self.assertAlmostEqual(result.summary["gamma"], -1.5, delta=0.02)

    def test_y_explicit_closure(self):
        cfg = load_scenario(find_scenario("y_explicit"))
        result = run_scenario(cfg)
        self.assertLess(result.summary["max_deviation"], 1e-6)
        self.assertTrue(result.checks["drift"])
        deviation = trajectory_deviation(result.record, y_explicit_solution(2.0, 1.0), cfg.L)
        self.assertEqual(deviation.size, len(result.record))

    def test_y_boundary_reduced_run(self):
        result = run_scenario(load_scenario(find_scenario("y_boundary")))
        self.assertEqual(result.summary["classification"], "cascade_boundary")
        self.assertEqual(result.record.stop_reason, "criticality")
        self.assertIsNotNone(result.summary["T_estimate"])
        self.assertTrue(result.checks["sobolev_rate[1]"])

    def test_compare_rejects_late_end(self):
        cfg = parse_scenario({"name": "late", "family": "Y", "s": 2.0, "L": 32, "pipeline": "compare",
                              "source": {"kind": "analytic", "N": 1.0},
                              "integrator": {"stop": {"t_end": 5.0}}})
        with self.assertRaises(DomainError):
            run_scenario(cfg)

class TestEmission(unittest.TestCase):
    def test_fixed_precision(self):
        self.assertEqual(fmt(None), "nan")
        self.assertEqual(fmt(float("nan")), "nan")
        self.assertEqual(fmt(3), "3")
        self.assertEqual(fmt(0.1), "0.10000000000000001")

    def test_emitted_tables(self):
        result = run_scenario(stationary_config())
        with tempfile.TemporaryDirectory() as tmp:
            paths = emit_result(result, tmp)
            self.assertEqual([p.name for p in paths],
                             [LAB.TIME_SERIES_FILE, LAB.SPECTRA_FILE, LAB.BANDS_FILE, LAB.POSITION_FILE,
                              LAB.SUMMARY_FILE])
            with open(Path(tmp) / LAB.TIME_SERIES_FILE, newline="") as f:
                rows = list(csv.DictReader(f))
            self.assertEqual(list(rows[0].keys()), time_series_columns(result.config.outputs.sobolev_xi))
            self.assertEqual(len(rows), len(result.record))
            self.assertEqual(rows[0]["F"], "nan")
            with open(Path(tmp) / LAB.SPECTRA_FILE, newline="") as f:
                spectra = list(csv.DictReader(f))
            self.assertEqual(len(spectra), len(result.snapshots) * (result.config.L + 1))
            with open(Path(tmp) / LAB.BANDS_FILE, newline="") as f:
                bands = list(csv.DictReader(f))
            self.assertEqual(len(bands), len(result.snapshots) * 2)
            self.assertEqual([(r["lo"], r["hi"]) for r in bands[:2]], [("0", "0"), ("1", "8")])
            with open(Path(tmp) / LAB.POSITION_FILE, newline="") as f:
                self.assertEqual(sum(1 for _ in csv.DictReader(f)), len(result.snapshots) * 128)
            with open(Path(tmp) / LAB.SUMMARY_FILE) as f:
                summary = json.load(f)
            self.assertTrue(summary["checks"]["stationary"])
            self.assertEqual([(b["lo"], b["hi"]) for b in summary["bands"]], [(0, 0), (1, 8)])
            self.assertLessEqual(summary["bands"][0]["N"] + summary["bands"][1]["N"], 1.0 + 1e-12)

    def test_runs_are_reproducible(self):
        with tempfile.TemporaryDirectory() as tmp:
            emit_result(run_scenario(stationary_config()), Path(tmp) / "a")
            emit_result(run_scenario(stationary_config()), Path(tmp) / "b")
            for name in (LAB.TIME_SERIES_FILE, LAB.SPECTRA_FILE):
                self.assertEqual((Path(tmp) / "a" / name).read_text(), (Path(tmp) / "b" / name).read_text())

if __name__ == '__main__':
    unittest.main()
