import math
import unittest

import numpy as np

from cascade_lab.core.errors import BranchMismatchError, DomainError
from cascade_lab.systems.analytic import (GENERIC, TWO_MODE, ZERO_B, continuous_arctan_tan, criticality_at,
                                          solution_mode_state, time_at_gap, y_F_of_t, y_explicit_solution,
                                          y_gap_of_t, y_initial_data, y_near_T_F, y_state,
                                          z_asymptotics, z_condensation_initial_data, z_condensation_solution,
                                          z_F_of_t, z_gap_of_t, z_phases, z_state)
from cascade_lab.systems.manifold import conserved_from_manifold, reduced_rhs

def finite_difference(state_at, t, h=1e-6):
    return (state_at(t + h).as_array() - state_at(t - h).as_array()) / (2.0 * h)

class TestZCondensation(unittest.TestCase):
    def setUp(self):
        self.sol = z_condensation_solution(2.0, 1.0, 0.5)
        self.generic = z_condensation_solution(2.0, 1.0, 0.3)

    def test_two_mode_constants(self):
        self.assertEqual(self.sol.branch, TWO_MODE)
        self.assertAlmostEqual(self.sol.Omega, 1.0 / math.sqrt(2.0), places=14)
        self.assertAlmostEqual(self.sol.T, math.pi / math.sqrt(2.0), places=14)
        self.assertEqual(self.sol.F0, 0.0)
        self.assertEqual(self.generic.branch, GENERIC)
        self.assertEqual(z_condensation_solution(1.5, 1.0, 2.0).branch, ZERO_B)

    def test_initial_data(self):
        m = z_condensation_initial_data(2.0, 1.0, 0.5)
        self.assertAlmostEqual(abs(m.b), 1.0 / math.sqrt(2.0), places=14)
        self.assertAlmostEqual(abs(m.c), 1.0 / math.sqrt(2.0), places=14)
        self.assertEqual(m.p, 0)
        start = z_state(self.sol, 0.0)
        np.testing.assert_allclose(np.abs(start.as_array()), np.abs(m.as_array()), atol=1e-14)

    def test_gap_and_F_agree(self):
        for sol in (self.sol, self.generic):
            for t in np.linspace(0.0, 0.9 * sol.T, 7):
                self.assertAlmostEqual(z_F_of_t(sol, t) + z_gap_of_t(sol, t), sol.Fc, places=13)
            self.assertEqual(z_gap_of_t(sol, sol.T), 0.0)

    def test_invariants_conserved(self):
        for sol in (self.sol, self.generic):
            for t in np.linspace(0.1, 0.95 * sol.T, 5):
                cons = conserved_from_manifold(z_state(sol, t))
                self.assertAlmostEqual(cons.N, sol.N, places=11)
                self.assertAlmostEqual(cons.E, sol.E, places=10)
                self.assertAlmostEqual(cons.S, sol.S, places=9)

    def test_solves_reduced_system(self):
        for sol in (self.sol, self.generic):
            for t in (0.3, 0.5 * sol.T, 0.8 * sol.T):
                exact = reduced_rhs(z_state(sol, t))
                approx = finite_difference(lambda u: z_state(sol, u), t)
                self.assertLess(np.max(np.abs(exact - approx)) / np.max(np.abs(exact)), 1e-6)

    def test_asymptotics(self):
        tau = 1e-3
        m = z_state(self.sol, self.sol.T - tau)
        lead = z_asymptotics(self.sol, self.sol.T - tau)
        self.assertAlmostEqual(abs(m.c) ** 2 / lead["c_sq"], 1.0, places=2)
        delta = -math.expm1(-criticality_at(self.sol, self.sol.T - tau))
        self.assertAlmostEqual(delta / lead["criticality"], 1.0, places=2)

    def test_time_at_gap(self):
        for delta in (1e-2, 1e-6, 1e-10):
            t = time_at_gap(self.sol, delta)
            self.assertAlmostEqual(-math.expm1(-criticality_at(self.sol, t)) / delta, 1.0, places=7)
        with self.assertRaises(DomainError):
            time_at_gap(self.sol, 1.5)

    def test_branch_and_time_checks(self):
        with self.assertRaises(BranchMismatchError):
            z_phases(self.sol, 0.1, branch=ZERO_B)
        with self.assertRaises(DomainError):
            z_phases(self.sol, self.sol.T)
        with self.assertRaises(DomainError):
            z_gap_of_t(self.sol, 2.0 * self.sol.T)
        with self.assertRaises(DomainError):
            z_condensation_solution(1.0, 1.0, 0.5)

    def test_mode_state(self):
        state = solution_mode_state(self.sol, 1.0, 64)
        self.assertEqual(state.L, 64)
        self.assertEqual(state.t, 1.0)
        self.assertAlmostEqual(float(np.sum(np.abs(state.alpha) ** 2)), 1.0, places=6)

class TestContinuousArctan(unittest.TestCase):
    def test_continuous_across_poles(self):
        theta = np.linspace(0.0, 3.0 * math.pi, 3001)
        values = continuous_arctan_tan(0.5, theta)
        self.assertTrue(np.all(np.diff(values) > 0.0))
        self.assertAlmostEqual(float(values[-1]), 3.0 * math.pi, places=12)

    def test_small_angles(self):
        self.assertAlmostEqual(float(continuous_arctan_tan(2.0, 0.1)), math.atan(2.0 * math.tan(0.1)), places=14)

class TestYExplicit(unittest.TestCase):
    def setUp(self):
        self.sol = y_explicit_solution(2.0, 1.0)

    def test_constants(self):
        self.assertAlmostEqual(self.sol.E, 4.0 / 7.0, places=15)
        self.assertAlmostEqual(self.sol.S, 8.0 / 7.0, places=15)
        # asinh(sqrt(15 / (8 (s - 1)))) / Omega with Omega = 3 sqrt(15) / 14 gives 1.34954, not 1.3501
        omega = 3.0 * math.sqrt(15.0) / 14.0
        self.assertAlmostEqual(self.sol.T, math.asinh(math.sqrt(15.0 / 8.0)) / omega, places=12)
        self.assertAlmostEqual(self.sol.T, 1.3495, delta=1e-3)

    def test_starts_at_p_zero(self):
        m = y_initial_data(2.0, 1.0)
        self.assertEqual(m.p, 0)
        cons = conserved_from_manifold(m)
        self.assertAlmostEqual(cons.N, 1.0, places=14)
        self.assertAlmostEqual(cons.E, 4.0 / 7.0, places=14)
        self.assertAlmostEqual(cons.S, 8.0 / 7.0, places=13)

    def test_reaches_criticality(self):
        self.assertEqual(y_F_of_t(self.sol, 0.0), 0.0)
        self.assertAlmostEqual(y_F_of_t(self.sol, self.sol.T), self.sol.Fc, places=12)
        self.assertEqual(y_gap_of_t(self.sol, self.sol.T), 0.0)

    def test_solves_reduced_system(self):
        for t in (0.2, 0.6, 1.0):
            exact = reduced_rhs(y_state(self.sol, t))
            approx = finite_difference(lambda u: y_state(self.sol, u), t)
            self.assertLess(np.max(np.abs(exact - approx)) / np.max(np.abs(exact)), 1e-6)

    def test_near_T_expansion(self):
        tau = 1e-4
        exact = self.sol.Fc - y_gap_of_t(self.sol, self.sol.T - tau)
        self.assertAlmostEqual(y_near_T_F(self.sol, tau), exact, places=9)

    def test_phase_branch(self):
        with self.assertRaises(BranchMismatchError):
            z_phases(self.sol, 0.1)

if __name__ == '__main__':
    unittest.main()
