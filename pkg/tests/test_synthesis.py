import math
import unittest

import numpy as np

from cascade_lab.analysis.observables import position_at
from cascade_lab.analysis.synthesis import (manifold_modsq, manifold_sobolev, manifold_u, profile_from_invariants,
                                            profile_from_state, sobolev_approach, tail_exponent)
from cascade_lab.core.errors import DomainError
from cascade_lab.systems.couplings import FamilyKind
from cascade_lab.systems.flows import mode_sobolev
from cascade_lab.systems.manifold import ManifoldState, conserved_from_manifold, lift, manifold_F

class TestManifoldSums(unittest.TestCase):
    def setUp(self):
        # x / xc = 0.36 and 0.25: the head alone is exact
        self.states = [ManifoldState(FamilyKind.Z, 2.0, 0.5 + 0.1j, 0.3 - 0.2j, 0.3 * np.exp(0.7j)),
                       ManifoldState(FamilyKind.Y, 2.0, 0.6, 0.4 + 0.3j, 0.25 * np.exp(-1.1j))]

    def test_tail_exponents(self):
        self.assertEqual(tail_exponent(FamilyKind.Z, 2.0), 0.75)
        self.assertEqual(tail_exponent(FamilyKind.Y, 2.0), 1.25)
        self.assertEqual(tail_exponent(FamilyKind.Z, 1.0), 0.0)

    def test_modsq_matches_lift(self):
        for m in self.states:
            expected = np.abs(lift(m, 60).alpha) ** 2
            np.testing.assert_allclose(manifold_modsq(profile_from_state(m), 60), expected, rtol=1e-9)

    def test_sobolev_matches_lift(self):
        for m in self.states:
            alpha = lift(m, 300).alpha
            for xi in (0.5, 1.0, 2.0):
                value = manifold_sobolev(profile_from_state(m), xi)
                self.assertAlmostEqual(value / mode_sobolev(alpha, xi), 1.0, places=9)

    def test_profile_from_invariants_matches_state(self):
        for m in self.states:
            cons = conserved_from_manifold(m)
            from_inv = profile_from_invariants(m.family, m.s, cons.N, cons.E, F=manifold_F(m))
            from_state = profile_from_state(m)
            self.assertAlmostEqual(from_inv.b2, from_state.b2, places=12)
            self.assertAlmostEqual(from_inv.c2_over_x / from_state.c2_over_x, 1.0, places=10)
            self.assertAlmostEqual(from_inv.mu, from_state.mu, places=10)

    def test_tail_is_head_independent(self):
        profile = profile_from_invariants(FamilyKind.Z, 2.0, 1.0, 0.5, gap=1e-3)
        for xi in (0.5, 0.75, 1.0):
            long_head = manifold_sobolev(profile, xi, head=4096)
            short_head = manifold_sobolev(profile, xi, head=1024)
            self.assertAlmostEqual(short_head / long_head, 1.0, places=2)

    def test_position_matches_direct_sum(self):
        theta = np.linspace(0.0, 2.0 * math.pi, 17)
        for m in self.states:
            expected = position_at(lift(m, 300).alpha, theta)
            np.testing.assert_allclose(manifold_u(m, theta), expected, atol=1e-11)

    def test_relative_angles(self):
        m = self.states[0]
        theta = np.array([0.0, 0.3])
        np.testing.assert_allclose(manifold_u(m, theta, relative=True),
                                   manifold_u(m, theta - np.angle(m.p)), atol=1e-12)

    def test_position_at_p_zero(self):
        m = ManifoldState(FamilyKind.Z, 2.0, 0.6, 0.8, 0.0)
        u = manifold_u(m, np.array([0.0, math.pi]))
        np.testing.assert_allclose(u, [1.4, -0.2], atol=1e-14)

    def test_tail_in_position_space(self):
        profile_state = ManifoldState(FamilyKind.Z, 2.0, 0.5, 0.2, 0.5 * math.exp(-5e-4))
        theta = np.array([0.5, 2.0])
        long_head = manifold_u(profile_state, theta, head=4096)
        short_head = manifold_u(profile_state, theta, head=1024)
        self.assertLess(np.max(np.abs(long_head - short_head)) / np.max(np.abs(long_head)), 1e-4)

    def test_approach_profiles(self):
        data = sobolev_approach(FamilyKind.Z, 2.0, 1.0, 0.5, 2.0, [1.0], gap_range=(1e-6, 1e-4), points=5)
        self.assertEqual(data["gap"].size, 5)
        self.assertTrue(np.all(np.diff(data["tau"]) < 0.0))
        self.assertTrue(np.all(np.diff(data[1.0]) > 0.0))

    def test_invalid_requests(self):
        with self.assertRaises(DomainError):
            profile_from_invariants(FamilyKind.Z, 2.0, 1.0, 0.5)
        with self.assertRaises(DomainError):
            profile_from_state(ManifoldState(FamilyKind.Z, 2.0, 1.0, 0.0, 0.0))
        with self.assertRaises(DomainError):
            sobolev_approach(FamilyKind.Z, 2.0, 1.0, 0.5, 2.0, [1.0], gap_range=(1e-2, 1e-4))

if __name__ == '__main__':
    unittest.main()
