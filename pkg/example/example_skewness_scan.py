from dynpatterns import flow_zoo, flows, measures, geometry
import matplotlib.pyplot as plt

# Pick the number of nearest neighbours from the shape of the pooled kNN distance distribution:
# a large positive skewness means the largest distances sit in a long right tail.
R = 40
flow = flow_zoo.TorusModelI(n_samples=3000, n_presamples=R)
traj = flows.observe(flows.integrate_flow(flow), flow_zoo.TorusEmbed3D([0, 1]), flow=flow)
window = measures.WindowSpec(R)
field = measures.estimate_densities(measures.build_windows(traj, window), measures.make_grid(traj, 'tensor', Q=40),
                                    measures.KdeSpec('scott'), window, threads=4)
dm = geometry.pairwise_distances(field)

ks = [50, 100, 250, 500, 1000, 2000]
scan = geometry.skewness_scan(dm, ks)
print(scan.summary())

fig, axes = plt.subplots(1, 2, figsize=(11, 4))
axes[0].plot(ks, scan.skewness, marker='o')
axes[0].set_xscale('log')
axes[0].set_xlabel('k')
axes[0].set_ylabel('skewness of kNN distances')

for k in (100, 500, 2000):
    counts, edges, skew = geometry.distance_histogram(dm, k, bins=60)
    axes[1].stairs(counts, edges, label=f'k={k}, skew={skew:.2f}')
axes[1].set_xlabel('squared Hellinger distance')
axes[1].legend()
plt.show()
