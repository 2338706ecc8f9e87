"""
Squared Hellinger distances between window densities, kNN truncation, and the diagnostics used to
choose k and epsilon.

With a discrete reference measure supported on the Q_total grid points,

    d2(i, j) = (1/Q_total) sum_q (sqrt(rho_i(z_q)) - sqrt(rho_j(z_q)))^2.

The factor 1/2 of the usual Hellinger definition is dropped, so for grid-renormalized densities
0 <= d2 <= 2.

"""

import numpy as np
from scipy.spatial.distance import pdist, squareform
from absl import logging

from dynpatterns.dynpatterns_core import ValidationError, NumericalError
from dynpatterns import measures, utils


class DistanceMatrix():
    """
    N x N squared distances.

    # Attributes:
    # 1: d2:  dense symmetric matrix of squared distances.
    # 2. sparsity:  'dense' or 'knn'.
    # 3. k:  number of nearest neighbours for 'knn', else None.
    # 4. adjacency:  symmetric boolean support (diagonal included) for 'knn', else None.
    # 5. radii:  for 'knn', the distance from each window to its k-th nearest neighbour.
    # 6. metric:  'hellinger' or 'euclidean' (ambient-space baseline).
    """

    def __init__(self, d2, sparsity='dense', k=None, adjacency=None, radii=None, metric='hellinger'):
        self.d2 = d2
        self.sparsity = sparsity
        self.k = k
        self.adjacency = adjacency
        self.radii = radii
        self.metric = metric

    @property
    def N(self):
        return self.d2.shape[0]

    def support(self):
        """Boolean mask of kept entries."""
        if self.adjacency is None:
            return np.ones(self.d2.shape, dtype=bool)
        return self.adjacency

    def fingerprint(self):
        return utils.stable_hash(self.d2, self.sparsity, self.k,
                                 self.adjacency if self.adjacency is not None else 'dense')

    def triplets(self):
        """Kept entries as (i, j, value) rows, i <= j."""
        i, j = np.nonzero(np.triu(self.support()))
        return np.column_stack([i, j, self.d2[i, j]])


def _check_density(rho, name):
    if np.any(rho < 0):
        raise ValidationError(f"Density {name} has negative entries; Hellinger distances need "
                              f"nonnegative densities.")


def hellinger2(rho_i, rho_j, Q_total=None):
    """
    Squared Hellinger distance between two density rows on the same grid.

    :param Q_total: number of grid points; defaults to the row length.
    """
    rho_i = np.asarray(rho_i, dtype=float)
    rho_j = np.asarray(rho_j, dtype=float)
    if rho_i.shape != rho_j.shape:
        raise ValidationError(f"Density rows differ in length: {rho_i.shape} vs {rho_j.shape}.")
    _check_density(rho_i, 'rho_i')
    _check_density(rho_j, 'rho_j')
    if Q_total is None:
        Q_total = rho_i.size
    return float(np.sum((np.sqrt(rho_i) - np.sqrt(rho_j)) ** 2) / Q_total)


def pairwise_distances(field):
    """
    Dense matrix of squared Hellinger distances, each unordered pair computed once.
    """
    rho = field.densities
    _check_density(rho, 'field')
    N = rho.shape[0]
    if N == 1:
        return DistanceMatrix(np.zeros((1, 1)))
    roots = np.sqrt(rho)
    d2 = squareform(pdist(roots, 'sqeuclidean') / field.Q_total)
    logging.info('Pairwise Hellinger distances: N=%d, max d2=%.4g.', N, d2.max())
    return DistanceMatrix(d2)


def euclidean_distances(traj):
    """
    Squared Euclidean distances between the raw observations y_0..y_{N-1}, the ambient data-space
    baseline against which the measure-space geometry is compared.
    """
    y = traj.indexed()
    if y.shape[0] == 1:
        return DistanceMatrix(np.zeros((1, 1)), metric='euclidean')
    return DistanceMatrix(squareform(pdist(y, 'sqeuclidean')), metric='euclidean')


def nearest_neighbors(d2, k):
    """Indices (N, k) of the k nearest other windows of each window, ties broken by smaller index."""
    N = d2.shape[0]
    masked = np.array(d2, dtype=float, copy=True)
    np.fill_diagonal(masked, np.inf)
    order = np.argsort(masked, axis=1, kind='stable')
    return order[:, :k]


def knn_truncate(dm, k):
    """
    Keep edge (i, j) iff j is among the k nearest neighbours of i or i among those of j.

    The diagonal is always kept. Ties at the k-th distance go to the smaller index.
    """
    N = dm.N
    if int(k) != k or k < 1 or k > N - 1:
        raise ValidationError(f"k must be an integer in [1, {N - 1}], got {k}.")
    k = int(k)
    nn = nearest_neighbors(dm.d2, k)
    rows = np.repeat(np.arange(N), k)
    adjacency = np.zeros((N, N), dtype=bool)
    adjacency[rows, nn.ravel()] = True
    adjacency |= adjacency.T
    np.fill_diagonal(adjacency, True)
    radii = dm.d2[np.arange(N), nn[:, -1]]
    return DistanceMatrix(dm.d2, sparsity='knn', k=k, adjacency=adjacency, radii=radii,
                          metric=dm.metric)


def sample_skewness(values):
    """g1 = m3 / m2^{3/2} with biased central moments."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 3:
        raise ValidationError(f"Skewness needs at least 3 values, got {values.size}.")
    centered = values - values.mean()
    m2 = np.mean(centered ** 2)
    if not m2 > 0:
        raise NumericalError("Skewness is undefined: the pooled distances have zero variance.")
    m3 = np.mean(centered ** 3)
    return float(m3 / m2 ** 1.5)


def pooled_knn_distances(dm, k):
    """Hellinger distances sqrt(d2) over the undirected kNN edges, each edge once, diagonal excluded."""
    knn = knn_truncate(dm, k)
    iu = np.nonzero(np.triu(knn.adjacency, 1))
    return np.sqrt(knn.d2[iu])


class NeighborDiagnostics():
    """Skewness of the pooled kNN distance distribution per candidate k."""

    def __init__(self, k_candidates, skewness, recommended_k, monotone):
        self.k_candidates = list(k_candidates)
        self.skewness = list(skewness)
        self.recommended_k = recommended_k
        self.monotone = monotone   # skewness nonincreasing along the ladder
        self.decay = None          # optional kernel-decay curves

    def summary(self):
        return {'k': self.k_candidates, 'skewness': self.skewness,
                'recommended_k': self.recommended_k, 'monotone': self.monotone}


def skewness_scan(dm, k_candidates):
    """
    For each k, pool the symmetrized kNN distances and compute their sample skewness; recommend the
    k with the smallest |g1|. Along an increasing ladder of k the skewness usually moves from positive
    to negative; a ladder that does not is flagged.
    """
    if dm.sparsity != 'dense':
        raise ValidationError("skewness_scan needs the dense distance matrix.")
    k_candidates = [int(k) for k in k_candidates]
    if len(k_candidates) == 0:
        raise ValidationError("skewness_scan needs at least one candidate k.")
    for k in k_candidates:
        if k < 1 or k > dm.N - 1:
            raise ValidationError(f"Candidate k={k} outside [1, {dm.N - 1}].")
    skew = [sample_skewness(pooled_knn_distances(dm, k)) for k in k_candidates]
    best = k_candidates[int(np.argmin(np.abs(skew)))]
    order = np.argsort(k_candidates, kind='stable')
    ladder = np.asarray(skew)[order]
    monotone = bool(np.all(np.diff(ladder) <= 0))
    if not monotone:
        logging.warning('Skewness is not monotone along the k ladder %s: %s.',
                        sorted(k_candidates), np.round(ladder, 4).tolist())
    for k, g in zip(k_candidates, skew):
        logging.info('k=%d: skewness of pooled distances %.4f.', k, g)
    return NeighborDiagnostics(k_candidates, skew, best, monotone)


def distance_histogram(dm, k, bins=50):
    """Histogram of the pooled kNN distances for one k, together with their skewness."""
    pooled = pooled_knn_distances(dm, k)
    counts, edges = np.histogram(pooled, bins=bins)
    return counts, edges, sample_skewness(pooled)


def kernel_decay(dm, epsilon, n_anchors=5, seed=0):
    """
    Kernel similarities exp(-d2/epsilon) of seeded anchor windows against all windows, sorted in
    decreasing order (the similarity as a function of neighbour rank).

    :return: (anchor indices, array (n_anchors, N) of sorted similarities)
    """
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}.")
    n_anchors = min(int(n_anchors), dm.N)
    rng = np.random.default_rng(seed)
    anchors = np.sort(rng.choice(dm.N, size=n_anchors, replace=False))
    curves = -np.sort(-np.exp(-dm.d2[anchors] / epsilon), axis=1)
    return anchors, curves


def isometry_check(traj, rotation, translation, window, grid, kde):
    """
    Distances are invariant under isometries of the data space when the evaluation grid moves with
    the data. Run densities and distances on (traj, grid) and on their images under
    y -> rotation @ y + translation, and return the largest change of a distance entry.

    Per-dimension bandwidths do not rotate with the data, so one isotropic bandwidth is resolved on
    the original windows and used for both runs.
    """
    rotation = np.asarray(rotation, dtype=float)
    d = traj.observation_dim
    if rotation.shape != (d, d) or not np.allclose(rotation @ rotation.T, np.eye(d), atol=1e-12):
        raise ValidationError("isometry_check needs an orthogonal d x d rotation matrix.")
    windows = measures.build_windows(traj, window)
    h = kde.resolve(windows) if kde.is_fixed else \
        measures.KdeSpec('scott_isotropic', kde.renormalize).resolve(windows)
    iso = measures.KdeSpec(float(np.sqrt(np.mean(h ** 2))), kde.renormalize)

    base = pairwise_distances(measures.estimate_densities(windows, grid, iso, window))
    moved_traj = traj.transform(rotation, translation)
    moved_grid = grid.transform(rotation, translation)
    moved_windows = measures.build_windows(moved_traj, window)
    moved = pairwise_distances(measures.estimate_densities(moved_windows, moved_grid, iso, window))
    return float(np.max(np.abs(base.d2 - moved.d2)))
