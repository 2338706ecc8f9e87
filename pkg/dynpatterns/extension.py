"""
Out-of-sample (Nystrom) extension of the normalization vectors and the eigenfunctions to new
window measures.

For a new window measure pi with density row rho_pi on the training grid,

    k_j = exp(-d2(pi, j) / epsilon)     on the support of pi (all j when dense),
    q(pi) = sum_j k_j,   k~_j = k_j / (q(pi) q_j),   v(pi) = sum_j k~_j,
    phi_l(pi) = (1 - lambda_l)^{-1} sum_j (k~_j / v(pi)) phi_{l,j},

which reproduces the stored phi_{l,i} when pi is training window i.

"""

from concurrent.futures import ThreadPoolExecutor
import numpy as np
from absl import logging

from dynpatterns.dynpatterns_core import ValidationError, NumericalError
from dynpatterns import measures

# kernel weights below exp(-30) carry no information
_SUPPORT_LOG_FLOOR = -30.0
_RADIUS_RTOL = 1e-12


class ExtensionContext():
    """
    Frozen training state needed to evaluate the basis at new windows.

    :param field: training WindowDensityField (grid, bandwidth, R, renormalize flag, densities).
    :param basis: training SpectralBasis.
    :param kernel: KernelSpec used for the basis.
    :param distances: training DistanceMatrix; only its kNN radii are used (None when dense).
    :param lam_floor: smallest |1 - lambda_l| (|lambda_l| for the literal prefactor) accepted.
    :param prefactor: 'nystrom' -- (1 - lambda_l)^{-1}, consistent with the training values;
                      'literal' -- lambda_l^{-1/2}, the prefactor as usually printed, applied to the
                      sum-normalized h~ (q and v are plain row sums without a 1/N factor), so its
                      values differ in scale from the averaged convention by powers of N.
    """

    def __init__(self, field, basis, kernel, distances=None, lam_floor=1e-10, prefactor='nystrom'):
        if field.N != basis.N:
            raise ValidationError(f"Density field has N={field.N} windows, the basis N={basis.N}.")
        if prefactor not in ('nystrom', 'literal'):
            raise ValidationError(f"Unknown extension prefactor '{prefactor}'.")
        if distances is not None and basis.distance_hash is not None \
                and distances.fingerprint() != basis.distance_hash:
            raise ValidationError("The distance matrix does not match the one the basis was built on.")
        self.field = field
        self.basis = basis
        self.kernel = kernel
        self.distances = distances
        self.lam_floor = float(lam_floor)
        self.prefactor = prefactor
        self.roots = np.sqrt(field.densities)
        self.fingerprint = field.fingerprint()

    @property
    def N(self):
        return self.basis.N

    @property
    def knn(self):
        return self.distances is not None and self.distances.sparsity == 'knn'

    def check(self, fingerprint):
        """Refuse densities estimated with another grid, bandwidth, R or renormalization."""
        if fingerprint != self.fingerprint:
            raise ValidationError("New densities were not estimated with the training grid and KDE "
                                  "settings (fingerprint mismatch).")

    def scale(self, l):
        """Prefactor for the 1-based eigenfunction index l."""
        lam = self.basis.eigenvalues[l - 1]
        if self.prefactor == 'nystrom':
            mu = 1.0 - lam
            if not abs(mu) > self.lam_floor:
                raise NumericalError(f"Eigenfunction {l}: 1 - lambda = {mu:.3g} is below the extension "
                                     f"floor {self.lam_floor:.3g}.")
            return 1.0 / mu
        if not lam > self.lam_floor:
            raise NumericalError(f"Eigenfunction {l}: lambda = {lam:.3g} is below the extension floor "
                                 f"{self.lam_floor:.3g}.")
        return lam ** -0.5


def extend_density(samples, ctx):
    """
    Density rows of new windows on the training grid with the training bandwidths.

    :param samples: one window (R, d) or a stack of windows (B, R, d), row r = y_{-r}.
    :return: (Q_total,) for one window, (B, Q_total) for a stack.
    """
    samples = np.asarray(samples, dtype=float)
    single = samples.ndim == 2
    windows = samples[None] if single else samples
    if windows.ndim != 3:
        raise ValidationError(f"New windows must have shape (R, d) or (B, R, d), got {samples.shape}.")
    B, R, d = windows.shape
    if R != ctx.field.window.R:
        raise ValidationError(f"New window has R={R}, training used R={ctx.field.window.R}.")
    if d != ctx.field.grid.dim:
        raise ValidationError(f"New window is {d}-dimensional, training data is {ctx.field.grid.dim}-dimensional.")
    rows = measures.kde_rows(windows, ctx.field.grid.points, ctx.field.bandwidth, ctx.field.kde.renormalize)
    return rows[0] if single else rows


def _squared_distances(rows, ctx):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != ctx.field.Q_total:
        raise ValidationError(f"Density rows have {rows.shape[1]} entries, the training grid has "
                              f"{ctx.field.Q_total}.")
    if np.any(rows < 0):
        raise ValidationError("Density rows must be nonnegative.")
    roots = np.sqrt(rows)
    # same expansion as the training distances, row by row
    return np.stack([np.sum((ctx.roots - r) ** 2, axis=1) for r in roots]) / ctx.field.Q_total


def _support(d2, ctx):
    """Training windows a new window connects to."""
    if not ctx.knn:
        return np.ones(d2.shape, dtype=bool)
    k = ctx.distances.k
    keep = d2 == 0
    # a re-fed training window does not count itself among its k neighbours
    masked = np.where(keep, np.inf, d2)
    order = np.argsort(masked, axis=1, kind='stable')[:, :k]
    np.put_along_axis(keep, order, True, axis=1)
    # radii come from the pairwise pass; allow for its rounding against the row-wise sums here
    keep |= ctx.distances.radii[None, :] * (1.0 + _RADIUS_RTOL) >= d2
    return keep


class ExtendedWeights():
    """Per new window: q(pi), v(pi) and the normalized weights k~_j / v(pi) against the training set."""

    def __init__(self, q, v, weights):
        self.q = q
        self.v = v
        self.weights = weights


def extension_weights(rows, ctx):
    d2 = _squared_distances(rows, ctx)
    k = np.exp(-d2 / ctx.kernel.epsilon)
    k = np.where(_support(d2, ctx), k, 0.0)
    q = k.sum(axis=1)
    floor = ctx.N * np.exp(_SUPPORT_LOG_FLOOR)
    outside = np.nonzero(q < floor)[0]
    if outside.size:
        raise NumericalError(f"New window {outside[0]} is out of the support of the training data "
                             f"(q = {q[outside[0]]:.3g} < {floor:.3g}); {outside.size} window(s) affected.")
    k_tilde = k / (q[:, None] * ctx.basis.q[None, :])
    v = k_tilde.sum(axis=1)
    return ExtendedWeights(q, v, k_tilde / v[:, None])


def _eigenfunction_values(weights, ctx, ls):
    out = np.empty((weights.weights.shape[0], len(ls)))
    phi = ctx.basis.phi
    for col, l in enumerate(ls):
        if int(l) != l or l < 1 or l > ctx.basis.M:
            raise ValidationError(f"Eigenfunction index l must lie in [1, {ctx.basis.M}], got {l}.")
        l = int(l)
        if l == 1:
            # phi_1 is constant
            out[:, col] = phi[0, 0]
        elif ctx.prefactor == 'nystrom':
            out[:, col] = ctx.scale(l) * (weights.weights @ phi[:, l - 1])
        else:
            v_tr = ctx.basis.v
            h_tilde = weights.weights * np.sqrt(weights.v[:, None] / v_tr[None, :])
            out[:, col] = ctx.scale(l) * (h_tilde @ phi[:, l - 1])
    return out


def extend_eigenfunctions(rows, ctx, ls, threads=1, fingerprint=None):
    """
    phi_l at each new density row for every l in ls, as a (B, len(ls)) matrix.

    New windows are independent; with threads > 1 blocks of rows are processed concurrently.
    When `fingerprint` (of the field the rows come from) is given it must match training.
    """
    if fingerprint is not None:
        ctx.check(fingerprint)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    ls = list(ls)
    if threads <= 1 or rows.shape[0] < 2:
        return _eigenfunction_values(extension_weights(rows, ctx), ctx, ls)
    blocks = np.array_split(np.arange(rows.shape[0]), threads)
    blocks = [b for b in blocks if b.size]

    def work(idx):
        return _eigenfunction_values(extension_weights(rows[idx], ctx), ctx, ls)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.vstack(list(pool.map(work, blocks)))


def extend_eigenfunction(rho, ctx, l, fingerprint=None):
    """phi_l at a single new density row."""
    return float(extend_eigenfunctions(rho, ctx, [l], fingerprint=fingerprint)[0, 0])


def extend_reconstruction(rows, ctx, c, M_prime, fingerprint=None):
    """
    sum_{l <= M'} c_l v(pi)^{1/2} phi_l(pi) per new window, a (B, m) matrix.
    """
    if fingerprint is not None:
        ctx.check(fingerprint)
    c = np.asarray(c, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if int(M_prime) != M_prime or M_prime < 0 or M_prime > min(ctx.basis.M, c.shape[0]):
        raise ValidationError(f"M' must be an integer in [0, {min(ctx.basis.M, c.shape[0])}], got {M_prime}.")
    M_prime = int(M_prime)
    if M_prime == 0:
        return np.zeros((rows.shape[0], c.shape[1]))
    weights = extension_weights(rows, ctx)
    phi = _eigenfunction_values(weights, ctx, range(1, M_prime + 1))
    psi = np.sqrt(weights.v)[:, None] * phi
    return psi @ c[:M_prime]


def nystrom_consistency(ctx, ls=range(2, 11), indices=None):
    """
    Re-feed training windows and return the largest deviation of the extended eigenfunctions from
    the stored values, relative to max |phi_l| per eigenfunction.
    """
    ls = [l for l in ls if l <= ctx.basis.M]
    if indices is None:
        indices = np.arange(ctx.N)
    extended = extend_eigenfunctions(ctx.field.densities[indices], ctx, ls)
    stored = ctx.basis.phi[indices][:, [l - 1 for l in ls]]
    scale = np.max(np.abs(ctx.basis.phi[:, [l - 1 for l in ls]]), axis=0)
    dev = float(np.max(np.abs(extended - stored) / scale))
    logging.info('Nystrom consistency over %d windows and l=%s: max relative deviation %.3g.',
                 len(indices), ls, dev)
    return dev
