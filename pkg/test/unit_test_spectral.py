import math
import numpy as np
from absl.testing import absltest
from absl.testing import parameterized

from dynpatterns.dynpatterns_core import ObservedTrajectory, ValidationError, NumericalError
from dynpatterns import geometry, measures, spectral

"""
Unit tests for the kernel matrix, the alpha = 1 normalization and the eigenbasis.
"""


def _distances(N=80, R=6, Q=12, seed=1, renormalize=False):
    rng = np.random.default_rng(seed)
    traj = ObservedTrajectory(np.cumsum(rng.normal(scale=0.3, size=(N + R, 2)), axis=0), 0.1, R)
    window = measures.WindowSpec(R)
    grid = measures.make_grid(traj, 'tensor', Q=Q)
    field = measures.estimate_densities(measures.build_windows(traj, window), grid,
                                        measures.KdeSpec(0.5, renormalize), window)
    return geometry.pairwise_distances(field)


def _median_epsilon(dm):
    return float(np.median(dm.d2[np.triu_indices(dm.N, 1)]))


def _basis(N=80, M=10, knn=None):
    dm = _distances(N)
    if knn is not None:
        dm = geometry.knn_truncate(dm, knn)
    return dm, spectral.compute_basis(dm, spectral.KernelSpec(_median_epsilon(dm)), M)


class TestKernel(parameterized.TestCase):

    def test_values(self):
        dm = geometry.DistanceMatrix(np.array([[0.0, 0.5], [0.5, 0.0]]))
        G = spectral.kernel_matrix(dm, spectral.KernelSpec(0.5))
        self.assertEqual(G[0, 0], 1.0)
        self.assertAlmostEqual(G[0, 1], math.exp(-1.0), places=15)
        self.assertAlmostEqual(G[0, 1], 0.36788, places=5)

    def test_appendix_convention(self):
        spec = spectral.KernelSpec(0.5, convention='appendix')
        self.assertEqual(spec.epsilon, 0.5)
        self.assertEqual(spectral.KernelSpec(2.0, convention='appendix').epsilon, 8.0)

    @parameterized.parameters(0.0, -1.0)
    def test_invalid_epsilon(self, eps):
        with self.assertRaises(ValidationError):
            spectral.KernelSpec(eps)

    def test_renormalized_lower_bound(self):
        dm = _distances(N=40, renormalize=True)
        eps = 0.7
        G = spectral.kernel_matrix(dm, spectral.KernelSpec(eps))
        self.assertGreaterEqual(np.min(G), math.exp(-2.0 / eps) - 1e-15)

    def test_truncated_edges_are_zero(self):
        dm = geometry.knn_truncate(_distances(N=30), 3)
        G = spectral.kernel_matrix(dm, spectral.KernelSpec(1.0))
        np.testing.assert_array_equal(G[~dm.adjacency], 0.0)
        np.testing.assert_array_equal(np.diag(G), 1.0)


class TestNormalize(parameterized.TestCase):

    @parameterized.parameters(0.1, 0.5, 0.9)
    def test_two_by_two(self, a):
        G = np.array([[1.0, a], [a, 1.0]])
        norm = spectral.normalize(G)
        self.assertSequenceAlmostEqual(norm.q, [1 + a, 1 + a], places=14)
        self.assertSequenceAlmostEqual(norm.v, [1 / (1 + a), 1 / (1 + a)], places=14)
        np.testing.assert_allclose(norm.H, G / (1 + a), rtol=1e-14)
        np.testing.assert_allclose(norm.H.sum(axis=1), 1.0, rtol=0, atol=1e-15)

    def test_row_stochastic(self):
        dm = _distances()
        norm = spectral.normalize(spectral.kernel_matrix(dm, spectral.KernelSpec(_median_epsilon(dm))))
        self.assertLessEqual(np.max(np.abs(norm.H.sum(axis=1) - 1.0)), 1e-12)
        self.assertLessEqual(np.max(np.abs(norm.H_tilde - norm.H_tilde.T)), 1e-15)

    def test_isolated_vertices(self):
        with self.assertRaisesRegex(NumericalError, 'isolated'):
            spectral.normalize(np.eye(4))

    def test_sparse_matches_dense(self):
        dm = geometry.knn_truncate(_distances(N=50), 6)
        spec = spectral.KernelSpec(_median_epsilon(dm))
        dense = spectral.normalize(spectral.kernel_matrix(dm, spec))
        sparse = spectral.normalize(spectral.kernel_matrix(dm, spec, sparse=True))
        np.testing.assert_allclose(sparse.H_tilde.toarray(), dense.H_tilde, rtol=1e-13, atol=1e-16)
        np.testing.assert_allclose(sparse.v, dense.v, rtol=1e-13)


class TestEigendecompose(parameterized.TestCase):

    @parameterized.parameters(0.2, 0.6)
    def test_two_by_two(self, a):
        norm = spectral.normalize(np.array([[1.0, a], [a, 1.0]]))
        basis = spectral.eigendecompose(norm, 2)
        self.assertAlmostEqual(basis.eigenvalues[0], 0.0, places=12)
        self.assertAlmostEqual(basis.eigenvalues[1], 2 * a / (1 + a), places=12)
        self.assertSequenceAlmostEqual(basis.psi[:, 0], [1.0, 1.0], places=12)
        self.assertSequenceAlmostEqual(basis.psi[:, 1], [1.0, -1.0], places=12)
        self.assertSequenceAlmostEqual(basis.phi[:, 1], [math.sqrt(1 + a), -math.sqrt(1 + a)], places=12)

    def test_spectral_contracts(self):
        _, basis = _basis()
        lam = basis.eigenvalues
        self.assertLessEqual(abs(lam[0]), 1e-10)
        self.assertTrue(np.all(lam >= -1e-12))
        self.assertTrue(np.all(lam <= 2 + 1e-10))
        self.assertTrue(np.all(np.diff(lam) >= 0))
        phi1 = basis.phi[:, 0]
        self.assertLessEqual(np.ptp(phi1) / np.max(np.abs(phi1)), 1e-8)

    def test_orthonormality(self):
        _, basis = _basis()
        gram = basis.inner(basis.psi, basis.psi)
        self.assertLessEqual(np.max(np.abs(gram - np.eye(basis.M))), 1e-8)
        weighted = basis.omega_inner(basis.phi, basis.phi)
        self.assertLessEqual(np.max(np.abs(weighted - np.eye(basis.M))), 1e-8)

    def test_similarity_consistency(self):
        dm = _distances()
        spec = spectral.KernelSpec(_median_epsilon(dm))
        norm = spectral.normalize(spectral.kernel_matrix(dm, spec))
        basis = spectral.eigendecompose(norm, 8)
        lhs = norm.H @ basis.phi
        rhs = basis.phi * (1.0 - basis.eigenvalues)
        self.assertLessEqual(np.max(np.abs(lhs - rhs)), 1e-8)

    def test_top_vector_is_sqrt_v(self):
        dm, basis = _basis()
        direction = np.sqrt(basis.v) / np.linalg.norm(np.sqrt(basis.v))
        psi1 = basis.psi[:, 0] / np.linalg.norm(basis.psi[:, 0])
        self.assertLessEqual(np.max(np.abs(psi1 - direction)), 1e-10)

    def test_sign_rule(self):
        _, basis = _basis()
        idx = np.argmax(np.abs(basis.psi), axis=0)
        self.assertTrue(np.all(basis.psi[idx, np.arange(basis.M)] > 0))

    def test_rescaling_invariance(self):
        dm = _distances()
        eps = _median_epsilon(dm)
        a = spectral.compute_basis(dm, spectral.KernelSpec(eps), 6)
        scaled = geometry.DistanceMatrix(dm.d2 * 3.0)
        b = spectral.compute_basis(scaled, spectral.KernelSpec(eps * 3.0), 6)
        self.assertSequenceAlmostEqual(a.eigenvalues, b.eigenvalues, places=10)

    def test_lanczos_matches_dense(self):
        dm = _distances()
        spec = spectral.KernelSpec(_median_epsilon(dm))
        dense = spectral.compute_basis(dm, spec, 6)
        iterative = spectral.compute_basis(dm, spec, 6, dense_max_n=20)
        self.assertSequenceAlmostEqual(dense.eigenvalues, iterative.eigenvalues, places=8)

    def test_sparse_knn_basis(self):
        dm, basis = _basis(N=60, M=6, knn=10)
        iterative = spectral.compute_basis(dm, spectral.KernelSpec(_median_epsilon(dm)), 6, dense_max_n=20)
        self.assertSequenceAlmostEqual(basis.eigenvalues, iterative.eigenvalues, places=8)

    @parameterized.parameters(0, 81)
    def test_invalid_M(self, M):
        dm = _distances()
        norm = spectral.normalize(spectral.kernel_matrix(dm, spectral.KernelSpec(1.0)))
        with self.assertRaises(ValidationError):
            spectral.eigendecompose(norm, M)

    def test_truncate(self):
        _, basis = _basis()
        small = basis.truncate(3)
        self.assertEqual(small.M, 3)
        np.testing.assert_array_equal(small.phi, basis.phi[:, :3])


if __name__ == '__main__':
    absltest.main()
