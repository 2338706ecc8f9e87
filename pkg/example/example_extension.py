from dynpatterns import flow_zoo, flows, measures, geometry, spectral, reconstruct, extension
import numpy as np
import matplotlib.pyplot as plt

# Train on the first part of a Torus Model I trajectory, then evaluate the eigenfunctions and the
# reconstructed window mean on windows the basis has never seen.
R, n_train, n_test = 40, 3000, 1000
flow = flow_zoo.TorusModelI(n_samples=n_train + n_test, n_presamples=R)
traj = flows.observe(flows.integrate_flow(flow), flow_zoo.TorusEmbed3D([0, 1]), flow=flow)

window = measures.WindowSpec(R)
windows = np.asarray(measures.build_windows(traj, window))
grid = measures.make_grid(traj, 'tensor', Q=40)
field = measures.estimate_densities(windows[:n_train], grid, measures.KdeSpec('scott'), window, threads=4)
dm = geometry.knn_truncate(geometry.pairwise_distances(field), 500)
kernel = spectral.KernelSpec(1.0)
basis = spectral.compute_basis(dm, kernel, M=25)
ctx = extension.ExtensionContext(field, basis, kernel, distances=dm)

print('re-fed training windows, max relative deviation:', extension.nystrom_consistency(ctx))

means = reconstruct.time_average(traj, window, reconstruct.Moment(1))
c = reconstruct.expansion_coefficients(basis, means[:n_train])

rows = extension.extend_density(windows[n_train:], ctx)
phi_new = extension.extend_eigenfunctions(rows, ctx, [2, 3], threads=4)
predicted = extension.extend_reconstruction(rows, ctx, c, 25)

t = np.arange(n_train + n_test) * traj.dt
fig, axes = plt.subplots(2, 1, figsize=(10, 7), sharex=True)
axes[0].plot(t[:n_train], basis.phi[:, 1], label='phi_2 (training)')
axes[0].plot(t[n_train:], phi_new[:, 0], label='phi_2 (extended)')
axes[0].legend()
axes[1].plot(t, means[:, 0], label='window mean of y1')
axes[1].plot(t[n_train:], predicted[:, 0], label="extended reconstruction, M'=25")
axes[1].set_xlabel('t')
axes[1].legend()
plt.show()
