import sys
import numpy as np
import matplotlib.pyplot as plt
from dynpatterns import flow_zoo, flows, measures, geometry, spectral, reconstruct

"""
Expand the window mean, standard deviation, skewness and kurtosis in the eigenbasis and look at the
reconstruction error as more eigenfunctions are kept.

Usage:
    python example_moment_reconstruction.py [series.csv]

With a file (e.g. the daily RMM1, RMM2 index in its first two columns) the series is read from it,
otherwise a Lorenz 63 trajectory is generated.
"""

if len(sys.argv) > 1:
    R, k, eps = 60, 100, 0.02
    traj = flows.ingest_csv(sys.argv[1], columns=[0, 1], dt=1.0, window_length=R)
else:
    R, k, eps = 30, 1000, 0.32
    flow = flow_zoo.Lorenz63(n_samples=3000, n_presamples=R)
    traj = flows.observe(flows.integrate_flow(flow), flow_zoo.LorenzIdentity3D([0, 1]), flow=flow)

window = measures.WindowSpec(R)
field = measures.estimate_densities(measures.build_windows(traj, window), measures.make_grid(traj, 'tensor', Q=40),
                                    measures.KdeSpec('scott'), window, threads=4)
dm = geometry.knn_truncate(geometry.pairwise_distances(field), min(k, field.N - 1))
basis = spectral.compute_basis(dm, spectral.KernelSpec(eps), M=50)

targets, labels = reconstruct.window_targets(traj, window)
truncations = [1, 2, 5, 10, 15, 25, 50]
result = reconstruct.reconstruct_moments(basis, targets, truncations, normalize=True, labels=labels)

# Same statistics, from reconstructed raw moments instead
raw = reconstruct.raw_reconstruction_statistics(basis, traj, window, [15, 50])
print('mean from raw moments, M=50, max error:', np.max(np.abs(raw[50]['mean'] - targets[:, :traj.observation_dim])))

rmse = np.array([result.rmse[Mp] for Mp in truncations])
plt.figure(figsize=(7, 5))
for j, label in enumerate(labels):
    plt.semilogy(truncations, rmse[:, j], marker='o', label=label)
plt.xlabel("M'")
plt.ylabel('RMSE (unit-norm columns)')
plt.legend(ncol=2)
plt.show()

t = np.arange(basis.N) * traj.dt
plt.figure(figsize=(10, 4))
plt.plot(t, targets[:, 0], label='true')
for Mp in (5, 15, 50):
    plt.plot(t, result.reconstructions[Mp][:, 0], label=f"M'={Mp}")
plt.xlabel('t')
plt.ylabel(labels[0])
plt.legend()
plt.show()
