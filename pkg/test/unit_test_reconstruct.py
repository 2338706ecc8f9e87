import math
import numpy as np
from absl.testing import absltest
from absl.testing import parameterized

from dynpatterns.dynpatterns_core import ObservedTrajectory, ValidationError
from dynpatterns import geometry, measures, reconstruct, spectral

"""
Unit tests for window moments, expansion in the eigenbasis, truncated reconstruction and RMSE.
"""


def _traj(N=60, R=5, d=2, seed=0):
    rng = np.random.default_rng(seed)
    return ObservedTrajectory(np.cumsum(rng.normal(scale=0.3, size=(N + R, d)), axis=0), 0.1, R)


def _basis_for(traj, R, M=None, Q=10):
    window = measures.WindowSpec(R)
    grid = measures.make_grid(traj, 'tensor', Q=Q)
    field = measures.estimate_densities(measures.build_windows(traj, window), grid, measures.KdeSpec(0.5),
                                        window)
    dm = geometry.pairwise_distances(field)
    eps = float(np.median(dm.d2[np.triu_indices(dm.N, 1)]))
    return spectral.compute_basis(dm, spectral.KernelSpec(eps), M or dm.N)


def _circulant_basis(N=24, M=None):
    # points on a ring: every vertex sees the same distances, so v is uniform
    idx = np.arange(N)
    chord = 2.0 * np.sin(math.pi * np.abs(idx[:, None] - idx[None, :]) / N)
    dm = geometry.DistanceMatrix(chord ** 2)
    return spectral.compute_basis(dm, spectral.KernelSpec(0.5), M or N)


def _brute_force_moment(traj, R, n, i, j):
    total = 0.0
    terms = []
    for r in range(R):
        value = traj.sample(i - r)[j] ** n
        terms.append(abs(value))
        total += value
    return total / R, sum(terms) / R


class TestTimeAverage(parameterized.TestCase):

    def test_first_moment_single_sample(self):
        traj = _traj(R=1)
        means = reconstruct.time_average(traj, measures.WindowSpec(1), reconstruct.Moment(1))
        np.testing.assert_array_equal(means, traj.indexed())

    def test_hand_value(self):
        traj = ObservedTrajectory(np.array([[1.0], [3.0]]), 1.0, n_presamples=1)
        second = reconstruct.time_average(traj, measures.WindowSpec(2), reconstruct.Moment(2))
        self.assertEqual(second[0, 0], 5.0)

    @parameterized.parameters(1, 2, 3, 4, 5, 6)
    def test_window_moments_are_exact(self, n):
        R = 7
        traj = _traj(N=1000, R=R, seed=n)
        window = measures.WindowSpec(R)
        values = reconstruct.time_average(traj, window, reconstruct.Moment(n))
        for i in range(0, 1000, 37):
            for j in range(2):
                expected, scale = _brute_force_moment(traj, R, n, i, j)
                self.assertLessEqual(abs(values[i, j] - expected), 1e-13 * scale)

    def test_random_window_shapes(self):
        rng = np.random.default_rng(11)
        for draw in range(40):
            R = int(rng.integers(1, 65))
            d = int(rng.integers(1, 4))
            n = int(rng.integers(1, 7))
            traj = _traj(N=25, R=R, d=d, seed=draw)
            values = reconstruct.time_average(traj, measures.WindowSpec(R), reconstruct.Moment(n))
            self.assertEqual(values.shape, (25, d))
            for i in range(25):
                for j in range(d):
                    expected, scale = _brute_force_moment(traj, R, n, i, j)
                    self.assertLessEqual(abs(values[i, j] - expected), 1e-13 * scale)

    def test_custom_observable(self):
        traj = _traj(R=3)
        window = measures.WindowSpec(3)
        gamma = reconstruct.ObservableSpec('custom', name='polynomial', params={'coefficients': [1.0, 0.0, 2.0]})
        values = reconstruct.time_average(traj, window, gamma)
        m1 = reconstruct.time_average(traj, window, reconstruct.Moment(1))
        m2 = reconstruct.time_average(traj, window, reconstruct.Moment(2))
        np.testing.assert_allclose(values, 1.0 + 2.0 * m2, rtol=1e-12)
        self.assertEqual(gamma.output_dim(2), 2)
        cosine = reconstruct.ObservableSpec('custom', name='cosine', params={'omega': 2.0})
        self.assertEqual(reconstruct.time_average(traj, window, cosine).shape, m1.shape)

    @parameterized.parameters(0, 7, 1.5)
    def test_invalid_moment(self, n):
        with self.assertRaises(ValidationError):
            reconstruct.Moment(n)

    def test_unknown_observable(self):
        with self.assertRaises(ValidationError):
            reconstruct.ObservableSpec('custom', name='logistic')


class TestCentralMoments(parameterized.TestCase):

    def _from_window(self, values):
        values = np.asarray(values, dtype=float)
        return {n: np.array([[np.mean(values ** n)]]) for n in (1, 2, 3, 4)}

    def test_two_point_window(self):
        stats = reconstruct.central_moments(self._from_window([-1.0, 1.0]))
        self.assertAlmostEqual(stats['mean'][0, 0], 0.0, places=15)
        self.assertAlmostEqual(stats['std'][0, 0], 1.0, places=15)
        self.assertAlmostEqual(stats['skewness'][0, 0], 0.0, places=15)
        self.assertAlmostEqual(stats['kurtosis'][0, 0], 1.0, places=15)

    def test_symmetric_window(self):
        stats = reconstruct.central_moments(self._from_window([1.0, 2.0, 3.0, 4.0, 5.0]))
        self.assertLessEqual(abs(stats['skewness'][0, 0]), 1e-12)

    def test_constant_window(self):
        stats = reconstruct.central_moments(self._from_window([2.5, 2.5, 2.5]))
        self.assertEqual(stats['std'][0, 0], 0.0)
        self.assertTrue(stats['degenerate'][0, 0])
        self.assertTrue(math.isnan(stats['skewness'][0, 0]))
        self.assertTrue(math.isnan(stats['kurtosis'][0, 0]))

    def test_statistics_targets(self):
        traj = _traj(N=40, R=8)
        targets, labels = reconstruct.window_targets(traj, measures.WindowSpec(8), (1, 2))
        self.assertEqual(targets.shape, (40, 4))
        self.assertEqual(labels, ['mean[0]', 'mean[1]', 'std[0]', 'std[1]'])
        window = np.asarray(measures.build_windows(traj, measures.WindowSpec(8)))[5, :, 1]
        self.assertAlmostEqual(targets[5, 3], np.std(window), places=12)

    def test_statistics_mode_rejects_high_orders(self):
        with self.assertRaises(ValidationError):
            reconstruct.window_targets(_traj(), measures.WindowSpec(5), (5,))


class TestExpansion(parameterized.TestCase):

    def test_eigenvector_target(self):
        basis = _basis_for(_traj(), 5, M=10)
        c = reconstruct.expansion_coefficients(basis, basis.psi[:, 3])
        expected = np.zeros((10, 1))
        expected[3] = 1.0
        self.assertLessEqual(np.max(np.abs(c - expected)), 1e-10)

    def test_zero_target(self):
        basis = _basis_for(_traj(), 5, M=10)
        np.testing.assert_array_equal(reconstruct.expansion_coefficients(basis, np.zeros(basis.N)), 0.0)

    def test_constant_target_on_regular_graph(self):
        basis = _circulant_basis()
        a = 2.5
        c = reconstruct.expansion_coefficients(basis, np.full(basis.N, a))
        self.assertAlmostEqual(c[0, 0], a * np.mean(basis.psi[:, 0]), places=10)
        self.assertLessEqual(np.max(np.abs(c[1:])), 1e-10)

    def test_linearity(self):
        traj = _traj()
        basis = _basis_for(traj, 5, M=12)
        window = measures.WindowSpec(5)
        g1 = reconstruct.time_average(traj, window, reconstruct.Moment(1))
        g2 = reconstruct.time_average(traj, window, reconstruct.Moment(3))
        combined = reconstruct.expansion_coefficients(basis, 2.0 * g1 - 0.5 * g2)
        separate = 2.0 * reconstruct.expansion_coefficients(basis, g1) - 0.5 * reconstruct.expansion_coefficients(basis, g2)
        self.assertLessEqual(np.max(np.abs(combined - separate)), 1e-10 * max(1.0, np.max(np.abs(separate))))

    def test_full_basis_identity(self):
        traj = _traj(N=40)
        basis = _basis_for(traj, 5)
        targets, _ = reconstruct.window_targets(traj, measures.WindowSpec(5), (1, 2, 3, 4), mode='raw')
        c = reconstruct.expansion_coefficients(basis, targets)
        recon = reconstruct.reconstruct(basis, c, basis.N)
        self.assertLessEqual(np.max(np.abs(recon - targets)), 1e-8 * np.max(np.abs(targets)))

    def test_zero_truncation(self):
        basis = _basis_for(_traj(), 5, M=10)
        c = reconstruct.expansion_coefficients(basis, np.ones((basis.N, 3)))
        np.testing.assert_array_equal(reconstruct.reconstruct(basis, c, 0), np.zeros((basis.N, 3)))

    def test_orthogonal_to_first(self):
        basis = _basis_for(_traj(), 5, M=10)
        c = reconstruct.expansion_coefficients(basis, basis.psi[:, 1])
        self.assertLessEqual(np.max(np.abs(reconstruct.reconstruct(basis, c, 1))), 1e-10)

    def test_truncation_above_M(self):
        basis = _basis_for(_traj(), 5, M=10)
        c = reconstruct.expansion_coefficients(basis, np.ones(basis.N))
        with self.assertRaises(ValidationError):
            reconstruct.reconstruct(basis, c, 11)

    def test_rmse_nonincreasing(self):
        traj = _traj(N=60)
        basis = _basis_for(traj, 5)
        targets, labels = reconstruct.window_targets(traj, measures.WindowSpec(5))
        result = reconstruct.reconstruct_moments(basis, targets, [1, 5, 15, 30, 60], labels=labels)
        table = np.array([result.rmse[m] for m in result.truncations])
        self.assertTrue(np.all(np.diff(table, axis=0) <= 1e-12))
        self.assertLessEqual(np.max(table[-1]), 1e-8 * np.max(np.abs(targets)))

    def test_raw_then_convert(self):
        traj = _traj(N=40)
        basis = _basis_for(traj, 5)
        stats = reconstruct.raw_reconstruction_statistics(basis, traj, measures.WindowSpec(5), [basis.N])
        direct, _ = reconstruct.window_targets(traj, measures.WindowSpec(5), (1,))
        np.testing.assert_allclose(stats[basis.N]['mean'], direct, rtol=1e-7, atol=1e-9)

    def test_pattern_correlation(self):
        basis = _basis_for(_traj(), 5, M=10)
        corr = reconstruct.pattern_correlation(basis, 3.0 * basis.psi[:, 1] + 1.0, l=2)
        self.assertAlmostEqual(corr[0], 1.0, places=10)


class TestRmse(parameterized.TestCase):

    def test_identical(self):
        e = np.random.default_rng(0).normal(size=(10, 2))
        table = reconstruct.rmse_report(e, {5: e.copy()})
        np.testing.assert_array_equal(table[5], 0.0)

    def test_hand_value(self):
        table = reconstruct.rmse_report(np.array([1.0, 0.0, 0.0, 0.0]), {1: np.zeros(4)})
        self.assertEqual(table[1][0], 0.5)

    def test_normalized(self):
        e = np.array([[3.0], [4.0]])
        table = reconstruct.rmse_report(e, {1: np.zeros((2, 1))}, normalize=True)
        self.assertAlmostEqual(table[1][0], math.sqrt(0.5), places=15)

    def test_normalize_zero_column(self):
        with self.assertRaises(ValidationError):
            reconstruct.rmse_report(np.zeros((4, 1)), {1: np.zeros((4, 1))}, normalize=True)

    def test_shape_mismatch(self):
        with self.assertRaises(ValidationError):
            reconstruct.rmse_report(np.zeros((4, 2)), {1: np.zeros((4, 1))})


if __name__ == '__main__':
    absltest.main()
