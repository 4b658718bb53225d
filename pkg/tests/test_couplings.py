import math
import unittest

import numpy as np

from cascade_lab.core.errors import DomainError, ResonanceError
from cascade_lab.systems.couplings import (FamilyKind, ModeState, coupling, dense_rhs, fast_rhs,
                                           hamiltonian, make_family, random_state)

class TestCouplings(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(7)
        self.families = [make_family(FamilyKind.Z, 2.0, 12), make_family(FamilyKind.Y, 2.0, 12),
                         make_family(FamilyKind.SZEGO_CUBIC, 1.0, 12),
                         make_family(FamilyKind.BETA_Z, 2.5, 12, beta=0.3)]

    def test_resonance_required(self):
        with self.assertRaises(ResonanceError):
            coupling(self.families[0], 1, 2, 0, 1)
        with self.assertRaises(DomainError):
            coupling(self.families[0], 13, 0, 13, 0)

    def test_index_symmetries(self):
        for fam in self.families:
            for (n, m, k, j) in [(1, 2, 3, 0), (4, 0, 2, 2), (5, 3, 6, 2)]:
                c = coupling(fam, n, m, k, j)
                self.assertEqual(c, coupling(fam, m, n, k, j))
                self.assertEqual(c, coupling(fam, n, m, j, k))
                self.assertAlmostEqual(c, coupling(fam, k, j, n, m), places=12)

    def test_szego_coupling_is_one(self):
        fam = self.families[2]
        self.assertEqual(coupling(fam, 3, 4, 5, 2), 1.0)

    def test_y_family_is_sparse(self):
        fam = self.families[1]
        self.assertEqual(coupling(fam, 1, 2, 2, 1), 0.0)
        self.assertGreater(coupling(fam, 0, 3, 1, 2), 0.0)

    def test_z_low_couplings(self):
        # C_0000 = 1 and C_0101 = 1 + (s-1)/2 at s = 2
        fam = self.families[0]
        self.assertAlmostEqual(coupling(fam, 0, 0, 0, 0), 1.0, places=14)
        self.assertAlmostEqual(coupling(fam, 0, 1, 0, 1), 1.5, places=14)

    def test_fast_rhs_matches_dense(self):
        rng = np.random.default_rng(11)
        for L in (8, 16, 32):
            families = [make_family(FamilyKind.SZEGO_CUBIC, 1.0, L)]
            for s in (1.0, 1.5, 2.0, 3.0):
                families += [make_family(FamilyKind.Z, s, L), make_family(FamilyKind.Y, s, L),
                             make_family(FamilyKind.BETA_Z, s, L, beta=0.3)]
            for fam in families:
                for _ in range(20):
                    alpha = random_state(L, rng, decay=0.2).alpha
                    dense = dense_rhs(fam, alpha)
                    for backend in ("direct", "fft"):
                        error = np.max(np.abs(fast_rhs(fam, alpha, backend=backend) - dense))
                        self.assertLess(error, 1e-12, msg=f"{fam.kind.value} s={fam.s} L={L} {backend}")

    def test_beta_deformation_scales_interior_couplings(self):
        z = make_family(FamilyKind.Z, 2.0, 12)
        beta = make_family(FamilyKind.BETA_Z, 2.0, 12, beta=0.3)
        for (n, m, k, j) in [(1, 2, 3, 0), (0, 4, 2, 2), (1, 2, 2, 1), (5, 3, 6, 2)]:
            factor = 1.0 if n * m * k * j == 0 else 0.7
            self.assertAlmostEqual(coupling(beta, n, m, k, j), factor * coupling(z, n, m, k, j), places=13)

    def test_beta_zero_is_z(self):
        alpha = random_state(16, self.rng, decay=0.2).alpha
        z = make_family(FamilyKind.Z, 1.5, 16)
        beta = make_family(FamilyKind.BETA_Z, 1.5, 16, beta=0.0)
        np.testing.assert_allclose(fast_rhs(beta, alpha), fast_rhs(z, alpha), rtol=0.0, atol=1e-14)

    def test_beta_one_keeps_only_the_sparse_layer(self):
        L = 10
        alpha = random_state(L, self.rng, decay=0.2).alpha
        z = make_family(FamilyKind.Z, 2.0, L)
        beta = make_family(FamilyKind.BETA_Z, 2.0, L, beta=1.0)
        expected = np.zeros(L + 1, dtype=complex)
        for n in range(L + 1):
            for m in range(L + 1):
                for k in range(L + 1):
                    j = n + m - k
                    if 0 <= j <= L and n * m * k * j == 0:
                        expected[n] += coupling(z, n, m, k, j) * np.conj(alpha[m]) * alpha[k] * alpha[j]
        np.testing.assert_allclose(fast_rhs(beta, alpha), -1j * expected, rtol=0.0, atol=1e-13)

    def test_hamiltonian_is_real(self):
        for fam in self.families:
            alpha = random_state(fam.L, self.rng, decay=0.1).alpha
            H = hamiltonian(fam, alpha)
            self.assertTrue(math.isfinite(H))

    def test_two_mode_hamiltonian(self):
        # b = c = 1/sqrt(2) on modes 0 and 1 has H = 1 at s = 2
        fam = make_family(FamilyKind.Z, 2.0, 8)
        alpha = np.zeros(9, dtype=complex)
        alpha[0] = alpha[1] = 1.0 / math.sqrt(2.0)
        self.assertAlmostEqual(hamiltonian(fam, alpha), 1.0, places=13)

    def test_wrong_size_rejected(self):
        with self.assertRaises(DomainError):
            fast_rhs(self.families[0], np.zeros(5, dtype=complex))
        with self.assertRaises(DomainError):
            fast_rhs(self.families[0], np.zeros(13, dtype=complex), backend="gpu")

    def test_mode_state_validation(self):
        with self.assertRaises(DomainError):
            ModeState(0.0, np.array([1.0]))
        with self.assertRaises(DomainError):
            ModeState(0.0, np.array([1.0, np.nan]))

    def test_random_state_normalized(self):
        state = random_state(20, np.random.default_rng(1), norm=2.5, decay=0.3)
        self.assertAlmostEqual(float(np.sum(np.abs(state.alpha) ** 2)), 2.5, places=12)

if __name__ == '__main__':
    unittest.main()
