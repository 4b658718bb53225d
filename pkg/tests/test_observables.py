import math
import unittest

import numpy as np

from cascade_lab.analysis.fits import powerlaw_fit
from cascade_lab.analysis.observables import (SpectrumSnapshot, band_fractions, conserved, cusp_angle,
                                              cusp_profile_y, grid_norms, position_at, position_space,
                                              solution_position, sobolev, spike_constant, spike_peak,
                                              spike_profile_z)
from cascade_lab.core.errors import AliasingError, DomainError
from cascade_lab.systems.analytic import (solution_state, y_explicit_solution, y_limit_spectrum,
                                          z_condensation_solution)
from cascade_lab.systems.couplings import FamilyKind, make_family, random_state

class TestSnapshots(unittest.TestCase):
    def setUp(self):
        self.state = random_state(20, np.random.default_rng(11), decay=0.1)
        self.snap = SpectrumSnapshot.from_state(self.state, FamilyKind.Z, 2.0)

    def test_validation(self):
        with self.assertRaises(DomainError):
            SpectrumSnapshot(t=0.0, modsq=np.array([1.0]), family="Z", s=2.0)
        with self.assertRaises(DomainError):
            SpectrumSnapshot(t=0.0, modsq=np.array([1.0, -0.1]), family="Z", s=2.0)
        self.assertEqual(self.snap.L, 20)
        self.assertEqual(self.snap.family, FamilyKind.Z)

    def test_conserved_needs_phases(self):
        fam = make_family(FamilyKind.Z, 2.0, 20)
        N, E, H = conserved(self.snap, fam)
        self.assertAlmostEqual(N, 1.0, places=13)
        bare = SpectrumSnapshot(t=0.0, modsq=self.snap.modsq, family="Z", s=2.0)
        with self.assertRaises(DomainError):
            conserved(bare, fam)

    def test_sobolev(self):
        modsq = np.array([1.0, 0.0, 1.0])
        snap = SpectrumSnapshot(t=0.0, modsq=modsq, family="Z", s=2.0)
        self.assertAlmostEqual(sobolev(snap, 1.0), math.sqrt(10.0), places=14)
        self.assertAlmostEqual(sobolev(snap, 1.0, squared=True), 10.0, places=14)

    def test_bands(self):
        snap = SpectrumSnapshot(t=0.0, modsq=np.array([1.0, 2.0, 3.0, 4.0]), family="Z", s=2.0)
        self.assertEqual(band_fractions(snap, [(0, 0), (2, 3)]), [(1.0, 0.0), (7.0, 18.0)])
        with self.assertRaises(DomainError):
            band_fractions(snap, [(0, 2), (2, 3)])
        with self.assertRaises(DomainError):
            band_fractions(snap, [(0, 4)])

class TestPositionSpace(unittest.TestCase):
    def setUp(self):
        self.state = random_state(20, np.random.default_rng(5), decay=0.1)

    def test_fft_matches_direct_sum(self):
        theta, u = position_space(self.state, 64)
        np.testing.assert_allclose(u, position_at(self.state, theta), atol=1e-12)

    def test_grid_norms(self):
        N, D = grid_norms(self.state, 64)
        modsq = np.abs(self.state.alpha) ** 2
        self.assertAlmostEqual(N, float(np.sum(modsq)), places=12)
        self.assertAlmostEqual(D, float(np.sum(np.arange(21) ** 2 * modsq)), places=10)

    def test_aliasing(self):
        with self.assertRaises(AliasingError):
            position_space(self.state, 30)

class TestSingularProfiles(unittest.TestCase):
    def test_spike_peak(self):
        self.assertAlmostEqual(spike_peak(1.0, 0.5), 6.2441, places=3)
        peak = spike_profile_z(2.0, 1.0, 0.5, 1.0, 0.9, 0.0)
        self.assertAlmostEqual(float(peak), spike_peak(1.0, 0.5), places=12)
        with self.assertRaises(DomainError):
            spike_profile_z(2.0, 1.0, 0.5, 1.0, 1.0, 0.0)

    def test_condensation_spike(self):
        sol = z_condensation_solution(2.0, 1.0, 0.5)
        value = float(np.abs(solution_position(sol, sol.T - 1e-2, 0.0)[0]) ** 2)
        self.assertAlmostEqual(value / spike_peak(1.0, 0.5), 1.0, delta=0.05)

    def test_spike_inner_window(self):
        sol = z_condensation_solution(2.0, 1.0, 0.5)
        tau = 1e-2
        theta = np.linspace(-2.0, 2.0, 9) * tau ** 4 / spike_constant(2.0, 1.0, 0.5)
        exact = np.abs(solution_position(sol, sol.T - tau, theta)) ** 2
        model = spike_profile_z(2.0, 1.0, 0.5, sol.T, sol.T - tau, theta)
        self.assertLess(np.max(np.abs(exact / model - 1.0)), 0.05)

    def test_cusp_is_reached_continuously(self):
        sol = y_explicit_solution(2.0, 1.0)
        t = 0.999 * sol.T
        theta = cusp_angle(sol) + np.array([-2.0, -0.5, -0.1, 0.1, 0.5, 2.0, 3.0])
        at_T = cusp_profile_y(sol, theta)
        before = np.abs(solution_position(sol, t, theta + np.angle(solution_state(sol, t).p))) ** 2
        self.assertLess(np.max(np.abs(before - at_T)), 2e-2 * np.max(at_T))

    def test_y_limit_amplitude(self):
        for s in (2.0, 3.0):
            sol = y_explicit_solution(s, 1.0)
            snap = SpectrumSnapshot(t=sol.T, modsq=y_limit_spectrum(sol, 256), family=FamilyKind.Y, s=s, mu=0.0)
            fit = powerlaw_fit(snap, corrections=1)
            predicted = (s + 1.0) / (2.0 * s) * sol.E * math.sqrt(sol.Ec / (math.pi * sol.N))
            self.assertAlmostEqual(fit.exponent, -2.5, delta=0.02)
            self.assertAlmostEqual(fit.amplitude / predicted, 1.0, delta=0.02, msg=f"s={s}")

    def test_y_cusp(self):
        sol = y_explicit_solution(2.0, 1.0)
        angle = cusp_angle(sol)
        self.assertTrue(0.0 <= angle < 2.0 * math.pi)
        values = cusp_profile_y(sol, np.array([angle, angle + 1.0]))
        self.assertTrue(np.all(np.isfinite(values)))
        self.assertTrue(np.all(values >= 0.0))
        at_focus = cusp_profile_y(sol, np.array([0.0]), relative=True)
        self.assertAlmostEqual(float(at_focus[0]) / float(values[0]), 1.0, places=2)
        with self.assertRaises(DomainError):
            cusp_profile_y(z_condensation_solution(2.0, 1.0, 0.5), np.array([0.0]))

if __name__ == '__main__':
    unittest.main()
