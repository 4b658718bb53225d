import unittest

import numpy as np

from cascade_lab.core.errors import DomainError
from cascade_lab.scenarios.sweep import LABELS, classification_sweep

class TestClassificationSweep(unittest.TestCase):
    def setUp(self):
        self.result = classification_sweep(s=2.0, N=2.0, n_E=20, n_S=20)

    def test_single_cascade_region(self):
        self.assertEqual(self.result.cascade_components(), 1)
        self.assertGreater(self.result.counts()["cascade_finite_T"], 0)

    def test_potential_sign_matches_classification(self):
        self.assertEqual(self.result.sign_mismatches(), 0)

    def test_grid_layout(self):
        r = self.result
        self.assertEqual(r.labels.shape, (20, 20))
        self.assertTrue(np.all((r.E > 0.0) & (r.E < 8.0)))
        self.assertTrue(np.all(r.S_bounds[:, 0] < r.S_bounds[:, 1]))
        self.assertEqual(sum(r.counts().values()), 400)
        self.assertTrue(set(r.labels.ravel()) <= set(LABELS))
        self.assertEqual(len(r.rows()), 400)

    def test_threads_give_same_table(self):
        threaded = classification_sweep(s=2.0, N=2.0, n_E=20, n_S=20, threads=4)
        np.testing.assert_array_equal(threaded.labels, self.result.labels)

    def test_invalid_requests(self):
        with self.assertRaises(DomainError):
            classification_sweep(s=1.0)
        with self.assertRaises(DomainError):
            classification_sweep(n_E=1)

if __name__ == '__main__':
    unittest.main()
