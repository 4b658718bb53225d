import math
import unittest

import numpy as np

from cascade_lab.core.errors import DomainError
from cascade_lab.series.sequences import (build_sequence_table, critical_constants, f_asymptotic,
                                          log_fuss_catalan, ratio_bound, verify_convolution_identity)

class TestSequences(unittest.TestCase):
    def setUp(self):
        self.table = build_sequence_table(2.0, 8)

    def test_catalan_numbers_at_s2(self):
        expected = [1, 1, 2, 5, 14, 42, 132, 429, 1430]
        np.testing.assert_allclose(self.table.A[:9], expected, rtol=1e-13)

    def test_critical_constants(self):
        xc, Fc, log_xc = critical_constants(2.0)
        self.assertAlmostEqual(xc, 0.25, places=15)
        self.assertEqual(Fc, 1.0)
        self.assertAlmostEqual(log_xc, math.log(0.25), places=14)
        xc3, Fc3, _ = critical_constants(3.0)
        self.assertAlmostEqual(xc3, 4.0 / 27.0, places=15)
        self.assertAlmostEqual(Fc3, 0.5, places=15)

    def test_s_equal_one_is_all_ones(self):
        table = build_sequence_table(1.0, 5)
        np.testing.assert_array_equal(table.A, np.ones(11))
        xc, Fc, _ = critical_constants(1.0)
        self.assertEqual(xc, 1.0)
        self.assertTrue(math.isinf(Fc))

    def test_g_sequence(self):
        # g_n = f_n / sqrt((s-1)n/2 + 1)
        n = np.arange(9)
        np.testing.assert_allclose(self.table.g[:9], self.table.f[:9] / np.sqrt(n / 2.0 + 1.0), rtol=1e-14)

    def test_tables_are_read_only(self):
        with self.assertRaises(ValueError):
            self.table.logA[3] = 0.0

    def test_fast_and_precise_paths_agree(self):
        fast = build_sequence_table(2.5, 200, precise=False)
        precise = build_sequence_table(2.5, 200)
        np.testing.assert_allclose(fast.logA, precise.logA, rtol=1e-11, atol=1e-11)

    def test_convolution_identity(self):
        for s in (1.5, 2.0, 3.0):
            for M in (2, 3, 10, 40):
                self.assertLess(verify_convolution_identity(s, M, relative=True), 1e-12)

    def test_asymptotic_growth(self):
        table = build_sequence_table(2.0, 1000, precise=False)
        n = np.array([500, 1000, 2000])
        ratio = table.f[n] / f_asymptotic(2.0, n)
        np.testing.assert_allclose(ratio, 1.0, atol=2e-3)

    def test_ratio_bound_is_finite(self):
        bound = ratio_bound(build_sequence_table(2.0, 32))
        self.assertTrue(math.isfinite(bound))
        self.assertGreaterEqual(bound, 1.0)

    def test_vectorized_log_matches_scalar(self):
        self.assertAlmostEqual(float(log_fuss_catalan(2.0, 5)), math.log(42.0), places=12)

    def test_invalid_s(self):
        with self.assertRaises(DomainError):
            build_sequence_table(0.5, 4)
        with self.assertRaises(DomainError):
            critical_constants(0.9)
        with self.assertRaises(DomainError):
            verify_convolution_identity(2.0, 1)

if __name__ == '__main__':
    unittest.main()
