from dynpatterns import flow_zoo, flows, measures, geometry, spectral
import numpy as np
import matplotlib.pyplot as plt

# Torus Model I, sampled 500 times per quasi-period, observed through the first two coordinates of the
# standard embedding in R^3.
R = 40
flow = flow_zoo.TorusModelI(beta=0.5, zeta=np.sqrt(30.0), n_samples=3000, n_presamples=R)
obs = flow_zoo.TorusEmbed3D(selected_components=[0, 1])
traj = flows.observe(flows.integrate_flow(flow), obs, flow=flow)

# one density per delay window, on a 50 x 50 grid
window = measures.WindowSpec(R)
grid = measures.make_grid(traj, 'tensor', Q=50)
field = measures.estimate_densities(measures.build_windows(traj, window), grid, measures.KdeSpec('scott'),
                                    window, threads=4)

# Hellinger distances, kept to the 500 nearest neighbours
dm = geometry.knn_truncate(geometry.pairwise_distances(field), 500)
basis = spectral.compute_basis(dm, spectral.KernelSpec(1.0), M=10)

print(basis.describe())
print('lambda = ', basis.eigenvalues)

t = np.arange(basis.N) * traj.dt
y = traj.indexed()

fig, axes = plt.subplots(2, 2, figsize=(10, 8))
for col, l in enumerate([2, 4]):
    axes[0, col].plot(t, basis.phi[:, l - 1])
    axes[0, col].set_xlabel('t')
    axes[0, col].set_ylabel(f'phi_{l}')
    axes[1, col].scatter(y[:, 0], y[:, 1], c=basis.phi[:, l - 1], s=2)
    axes[1, col].set_xlabel('y1')
    axes[1, col].set_ylabel('y2')
plt.tight_layout()
plt.show()
