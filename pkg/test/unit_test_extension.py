import numpy as np
from absl.testing import absltest
from absl.testing import parameterized

from dynpatterns.dynpatterns_core import ObservedTrajectory, ValidationError, NumericalError
from dynpatterns import extension, flow_zoo, flows, geometry, measures, reconstruct, spectral

"""
Unit tests for the out-of-sample extension of densities, eigenfunctions and reconstructions.
"""


def _training(N=60, R=5, Q=10, seed=0, knn=None, M=12, lam_floor=1e-10, prefactor='nystrom'):
    rng = np.random.default_rng(seed)
    traj = ObservedTrajectory(np.cumsum(rng.normal(scale=0.3, size=(N + R, 2)), axis=0), 0.1, R)
    window = measures.WindowSpec(R)
    windows = measures.build_windows(traj, window)
    grid = measures.make_grid(traj, 'tensor', Q=Q)
    field = measures.estimate_densities(windows, grid, measures.KdeSpec(0.5), window)
    dm = geometry.pairwise_distances(field)
    # a quarter of the median squared distance keeps 1 - lambda_l away from 0 for l <= 12
    spec = spectral.KernelSpec(0.25 * float(np.median(dm.d2[np.triu_indices(N, 1)])))
    if knn is not None:
        dm = geometry.knn_truncate(dm, knn)
    basis = spectral.compute_basis(dm, spec, M)
    ctx = extension.ExtensionContext(field, basis, spec, distances=dm if knn else None,
                                     lam_floor=lam_floor, prefactor=prefactor)
    return traj, np.asarray(windows), ctx


class TestExtendDensity(parameterized.TestCase):

    def test_training_window_reproduces_row(self):
        _, windows, ctx = _training()
        for i in (0, 17, 59):
            np.testing.assert_array_equal(extension.extend_density(windows[i], ctx), ctx.field.densities[i])

    def test_stack_of_windows(self):
        _, windows, ctx = _training()
        rows = extension.extend_density(windows[:4], ctx)
        self.assertEqual(rows.shape, (4, ctx.field.Q_total))

    def test_far_outside_grid(self):
        _, windows, ctx = _training()
        row = extension.extend_density(windows[0] + 100.0, ctx)
        self.assertTrue(np.all(row >= 0.0))
        self.assertLess(np.max(row), 1e-100)

    def test_wrong_window_length(self):
        _, windows, ctx = _training()
        with self.assertRaises(ValidationError):
            extension.extend_density(windows[0, :3], ctx)

    def test_wrong_dimension(self):
        _, _, ctx = _training()
        with self.assertRaises(ValidationError):
            extension.extend_density(np.zeros((5, 3)), ctx)

    def test_fingerprint_mismatch(self):
        traj, windows, ctx = _training()
        other = measures.estimate_densities(windows, ctx.field.grid, measures.KdeSpec(0.7), ctx.field.window)
        ctx.check(ctx.field.fingerprint())
        with self.assertRaises(ValidationError):
            ctx.check(other.fingerprint())

    def test_extension_checks_fingerprint(self):
        _, windows, ctx = _training()
        other = measures.estimate_densities(windows, ctx.field.grid, measures.KdeSpec(0.7), ctx.field.window)
        rows = other.densities[:3]
        with self.assertRaisesRegex(ValidationError, 'fingerprint'):
            extension.extend_eigenfunctions(rows, ctx, [2], fingerprint=other.fingerprint())
        with self.assertRaisesRegex(ValidationError, 'fingerprint'):
            extension.extend_eigenfunction(rows[0], ctx, 2, fingerprint=other.fingerprint())
        with self.assertRaisesRegex(ValidationError, 'fingerprint'):
            extension.extend_reconstruction(rows, ctx, np.ones(ctx.basis.M), 3, fingerprint=other.fingerprint())
        values = extension.extend_eigenfunctions(ctx.field.densities[:3], ctx, [2], fingerprint=ctx.fingerprint)
        np.testing.assert_allclose(values[:, 0], ctx.basis.phi[:3, 1], rtol=1e-6,
                                   atol=1e-6 * np.max(np.abs(ctx.basis.phi[:, 1])))

    def test_distance_mismatch(self):
        _, _, ctx = _training()
        other = geometry.DistanceMatrix(np.zeros((ctx.N, ctx.N)))
        with self.assertRaises(ValidationError):
            extension.ExtensionContext(ctx.field, ctx.basis, ctx.kernel, distances=other)


class TestExtendEigenfunctions(parameterized.TestCase):

    def test_dense_consistency(self):
        _, _, ctx = _training()
        self.assertLessEqual(extension.nystrom_consistency(ctx), 1e-6)

    def test_knn_consistency(self):
        _, _, ctx = _training(knn=10)
        self.assertTrue(ctx.knn)
        self.assertLessEqual(extension.nystrom_consistency(ctx), 1e-3)

    def test_single_value(self):
        _, _, ctx = _training()
        value = extension.extend_eigenfunction(ctx.field.densities[7], ctx, 3)
        self.assertAlmostEqual(value, ctx.basis.phi[7, 2], delta=1e-6 * np.max(np.abs(ctx.basis.phi[:, 2])))

    def test_first_is_constant(self):
        _, windows, ctx = _training()
        rows = extension.extend_density(windows[:5] + 0.1, ctx)
        values = extension.extend_eigenfunctions(rows, ctx, [1])
        np.testing.assert_array_equal(values[:, 0], ctx.basis.phi[0, 0])

    def test_threads_match_serial(self):
        _, windows, ctx = _training()
        rows = extension.extend_density(windows + 0.05, ctx)
        serial = extension.extend_eigenfunctions(rows, ctx, [2, 3, 4])
        threaded = extension.extend_eigenfunctions(rows, ctx, [2, 3, 4], threads=3)
        np.testing.assert_allclose(serial, threaded, rtol=1e-12, atol=1e-14)

    def test_out_of_support(self):
        _, _, ctx = _training()
        row = 1e6 * np.ones(ctx.field.Q_total)
        with self.assertRaisesRegex(NumericalError, 'support'):
            extension.extend_eigenfunction(row, ctx, 2)

    def test_eigenvalue_floor(self):
        _, _, ctx = _training(lam_floor=2.0)
        with self.assertRaises(NumericalError):
            extension.extend_eigenfunction(ctx.field.densities[0], ctx, 2)

    def test_literal_prefactor(self):
        _, windows, ctx = _training(prefactor='literal')
        rows = extension.extend_density(windows[:6] + 0.1, ctx)
        values = extension.extend_eigenfunctions(rows, ctx, [1, 2, 3])
        self.assertTrue(np.all(np.isfinite(values)))

    def test_unknown_prefactor(self):
        with self.assertRaises(ValidationError):
            _training(prefactor='inverse')

    @parameterized.parameters(0, 13)
    def test_index_out_of_range(self, l):
        _, _, ctx = _training()
        with self.assertRaises(ValidationError):
            extension.extend_eigenfunction(ctx.field.densities[0], ctx, l)

    def test_rejects_negative_rows(self):
        _, _, ctx = _training()
        row = ctx.field.densities[0].copy()
        row[3] = -1.0
        with self.assertRaises(ValidationError):
            extension.extend_eigenfunction(row, ctx, 2)


class TestExtendReconstruction(parameterized.TestCase):

    def test_in_sample_matches_reconstruction(self):
        traj, _, ctx = _training()
        targets = reconstruct.time_average(traj, ctx.field.window, reconstruct.Moment(1))
        c = reconstruct.expansion_coefficients(ctx.basis, targets)
        inside = reconstruct.reconstruct(ctx.basis, c, 8)
        extended = extension.extend_reconstruction(ctx.field.densities, ctx, c, 8)
        self.assertLessEqual(np.max(np.abs(extended - inside)), 1e-6 * np.max(np.abs(inside)))

    def test_zero_truncation(self):
        _, _, ctx = _training()
        c = np.ones((ctx.basis.M, 2))
        out = extension.extend_reconstruction(ctx.field.densities[:3], ctx, c, 0)
        np.testing.assert_array_equal(out, np.zeros((3, 2)))

    def test_truncation_too_large(self):
        _, _, ctx = _training()
        with self.assertRaises(ValidationError):
            extension.extend_reconstruction(ctx.field.densities[:3], ctx, np.ones(ctx.basis.M), ctx.basis.M + 1)

    def test_held_out_torus_windows(self):
        R, n_train, n_test = 20, 600, 200
        flow = flow_zoo.TorusModelI(samples_per_period=50, n_samples=n_train + n_test, n_presamples=R)
        traj = flows.observe(flows.integrate_flow(flow), flow_zoo.TorusEmbed3D([0, 1]), flow=flow)
        window = measures.WindowSpec(R)
        windows = np.asarray(measures.build_windows(traj, window))
        grid = measures.make_grid(traj, 'tensor', Q=25)
        field = measures.estimate_densities(windows[:n_train], grid, measures.KdeSpec('scott'), window)
        dm = geometry.pairwise_distances(field)
        # a narrow kernel: the extension divides by 1 - lambda_l, which must stay well above 0 up to l = 25
        spec = spectral.KernelSpec(float(np.quantile(dm.d2[np.triu_indices(n_train, 1)], 0.1)))
        basis = spectral.compute_basis(dm, spec, 25)
        ctx = extension.ExtensionContext(field, basis, spec, distances=dm)

        means = reconstruct.time_average(traj, window, reconstruct.Moment(1))
        c = reconstruct.expansion_coefficients(basis, means[:n_train])
        rows = extension.extend_density(windows[n_train:], ctx)
        predicted = extension.extend_reconstruction(rows, ctx, c, 25)
        for j in range(2):
            corr = np.corrcoef(predicted[:, j], means[n_train:, j])[0, 1]
            self.assertGreater(corr, 0.9)


if __name__ == '__main__':
    absltest.main()
