from dynpatterns import flow_zoo, flows, measures, geometry, spectral
import numpy as np
import matplotlib.pyplot as plt

"""
The torus flow with a fixed point. Trajectories slow down near the origin, so the raw observations
pile up there. Compare the eigenfunctions from Euclidean distances between observations with those
from Hellinger distances between window measures.
"""

R = 40
flow = flow_zoo.OxtobyTorus(dt=0.01, n_samples=4000, n_presamples=R)
obs = flow_zoo.TorusFlatEmbed4D(selected_components=[0, 1])
traj = flows.observe(flows.integrate_flow(flow), obs, flow=flow)

window = measures.WindowSpec(R)
grid = measures.make_grid(traj, 'tensor', Q=40)
field = measures.estimate_densities(measures.build_windows(traj, window), grid, measures.KdeSpec('scott'),
                                    window, threads=4)

hellinger = geometry.knn_truncate(geometry.pairwise_distances(field), 2000)
ambient = geometry.knn_truncate(geometry.euclidean_distances(traj), 2000)

# a kernel width at the median squared distance for the ambient baseline
eps_ambient = float(np.median(ambient.d2[np.triu_indices(ambient.N, 1)]))

basis_h = spectral.compute_basis(hellinger, spectral.KernelSpec(1.0), M=6)
basis_a = spectral.compute_basis(ambient, spectral.KernelSpec(eps_ambient), M=6)

print('Hellinger lambda = ', basis_h.eigenvalues)
print('Ambient   lambda = ', basis_a.eigenvalues)

t = np.arange(basis_h.N) * traj.dt
plt.figure(figsize=(10, 5))
plt.plot(t, basis_h.phi[:, 1], label='Hellinger, phi_2')
plt.plot(t, basis_a.phi[:, 1], label='Euclidean, phi_2', alpha=0.7)
plt.xlabel('t')
plt.legend()
plt.show()
