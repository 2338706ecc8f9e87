"""
Delay-window empirical measures and their kernel density estimates on a shared evaluation grid.

Window i is the multiset {y_{i-r} : r = 0, ..., R-1} with equal weights 1/R. Its density estimate is

    rho_i(z) = (1/R) sum_r k_h(z, y_{i-r}),

with k_h the diagonal-bandwidth Gaussian product kernel normalized to integrate to one on R^d.

"""

import math
from concurrent.futures import ThreadPoolExecutor
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.spatial.distance import cdist
from absl import logging

from dynpatterns.dynpatterns_core import ValidationError, DataError
from dynpatterns import utils

# Upper bound on the number of kernel evaluations held in memory per block of windows.
_BLOCK_EVALUATIONS = 4000000


class WindowSpec():
    """R delay samples per window, so that the window length is Delta t = R * dt."""

    def __init__(self, R):
        if int(R) != R or R < 1:
            raise ValidationError(f"Window length R must be a positive integer, got {R}.")
        self.R = int(R)

    def check(self, traj):
        if traj.n_presamples < self.R - 1:
            raise DataError(f"Trajectory has {traj.n_presamples} pre-samples; windows of R={self.R} "
                            f"need samples down to index {-(self.R - 1)}.")

    def duration(self, dt):
        return self.R * dt

    def describe(self):
        return {'R': self.R}


def build_windows(traj, spec):
    """
    Return the N delay windows as an array of shape (N, R, d) with windows[i, r] = y_{i-r}.

    The result is a read-only strided view of the trajectory samples.
    """
    spec.check(traj)
    R = spec.R
    N = traj.n_samples
    # view[s, :, t] = samples[s + t]
    view = sliding_window_view(traj.samples, R, axis=0)
    start = traj.n_presamples - R + 1
    windows = view[start:start + N]
    # (N, d, R) -> (N, R, d), then reverse so that r = 0 is the most recent sample.
    return np.swapaxes(windows, 1, 2)[:, ::-1, :]


class EvaluationGrid():
    """
    The Q_total evaluation points z_q supporting the reference measure.

    construction is a dictionary, e.g. {'kind': 'tensor', 'Q': 50, 'bounds': [[lo, hi], ...]}
    or {'kind': 'subsample', 'Q_total': 2000, 'seed': 0}.
    """

    def __init__(self, points, construction):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[0] < 2:
            raise ValidationError(f"An evaluation grid needs at least 2 points, got {points.shape[0]}.")
        if not np.all(np.isfinite(points)):
            raise ValidationError("Evaluation grid points must be finite.")
        self.points = points
        self.construction = construction

    @property
    def Q_total(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def transform(self, rotation=None, translation=None):
        """Image of the grid under z -> rotation @ z + translation."""
        points = self.points
        if rotation is not None:
            points = points @ np.asarray(rotation, dtype=float).T
        if translation is not None:
            points = points + np.asarray(translation, dtype=float)
        return EvaluationGrid(points, {'kind': 'transformed', 'from': self.construction})

    def fingerprint(self):
        return utils.stable_hash(self.points)


def make_grid(traj, construction='tensor', Q=50, margin=0.1, bounds=None, Q_total=None, seed=0):
    """
    Build the evaluation grid.

    tensor: Q equispaced points per dimension over [lo - m, hi + m], m = margin * (hi - lo), where
        [lo, hi] is the data range per dimension unless `bounds` is given.
    subsample: Q_total of the samples y_0..y_{N-1} drawn without replacement with the given seed,
        kept in time order.
    """
    if construction == 'tensor':
        if int(Q) != Q or Q < 2:
            raise ValidationError(f"Q must be an integer >= 2, got {Q}.")
        if margin < 0:
            raise ValidationError(f"Grid margin must be nonnegative, got {margin}.")
        d = traj.observation_dim
        if bounds is None:
            bounds = np.column_stack([traj.samples.min(axis=0), traj.samples.max(axis=0)])
        bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
        if bounds.shape[0] != d:
            raise ValidationError(f"Grid bounds given for {bounds.shape[0]} dimensions, data has {d}.")
        axes = []
        for j, (lo, hi) in enumerate(bounds):
            if not hi > lo:
                raise ValidationError(f"Degenerate grid dimension {j}: max ({hi}) must exceed min ({lo}).")
            m = margin * (hi - lo)
            axes.append(np.linspace(lo - m, hi + m, int(Q)))
        mesh = np.meshgrid(*axes, indexing='ij')
        points = np.column_stack([g.ravel() for g in mesh])
        return EvaluationGrid(points, {'kind': 'tensor', 'Q': int(Q), 'margin': margin,
                                       'bounds': bounds.tolist()})
    elif construction == 'subsample':
        pool = traj.indexed()
        if Q_total is None or Q_total < 2 or Q_total > pool.shape[0]:
            raise ValidationError(f"Q_total must lie in [2, {pool.shape[0]}], got {Q_total}.")
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(pool.shape[0], size=int(Q_total), replace=False))
        return EvaluationGrid(pool[idx], {'kind': 'subsample', 'Q_total': int(Q_total), 'seed': seed})
    else:
        raise ValidationError(f"Unknown grid construction '{construction}'.")


class KdeSpec():
    """
    Gaussian product kernel with a diagonal bandwidth.

    bandwidth: 'scott' -- h_j = sigma_j R^{-1/(d+4)}, sigma_j the per-window standard deviation of
                          dimension j pooled (root mean square) over all windows;
               'scott_isotropic' -- the same with sigma pooled over all dimensions;
               a positive number or a list of d positive numbers -- fixed bandwidths.
    renormalize: if True, each density row is scaled to have mean one over the grid.
    """

    def __init__(self, bandwidth='scott', renormalize=False):
        if isinstance(bandwidth, str):
            if bandwidth not in ('scott', 'scott_isotropic'):
                raise ValidationError(f"Unknown bandwidth rule '{bandwidth}'.")
        else:
            h = np.atleast_1d(np.asarray(bandwidth, dtype=float))
            if not np.all(h > 0) or not np.all(np.isfinite(h)):
                raise ValidationError(f"Bandwidths must be strictly positive, got {h.tolist()}.")
            bandwidth = h
        self.bandwidth = bandwidth
        self.renormalize = bool(renormalize)

    @property
    def is_fixed(self):
        return not isinstance(self.bandwidth, str)

    def resolve(self, windows):
        """Return the bandwidth vector (d,) for the given (N, R, d) windows."""
        N, R, d = windows.shape
        if self.is_fixed:
            h = self.bandwidth
            if h.size == 1:
                h = np.full(d, h[0])
            if h.size != d:
                raise ValidationError(f"{h.size} bandwidths given for {d}-dimensional data.")
            return h
        if R < 2:
            raise ValidationError("Scott's rule needs windows with R >= 2; use a fixed bandwidth.")
        var = np.var(windows, axis=1, ddof=1)   # (N, d)
        sigma = np.sqrt(np.mean(var, axis=0))
        if self.bandwidth == 'scott_isotropic':
            sigma = np.full(d, np.sqrt(np.mean(sigma ** 2)))
        h = sigma * R ** (-1.0 / (d + 4))
        if not np.all(h > 0):
            raise ValidationError(f"Scott's rule gives a zero bandwidth (h={h.tolist()}); the windows "
                                  f"are constant along some dimension. Use a fixed bandwidth.")
        return h

    def describe(self):
        bw = self.bandwidth if isinstance(self.bandwidth, str) else self.bandwidth.tolist()
        return {'bandwidth': bw, 'renormalize': self.renormalize}


class WindowDensityField():
    """densities[i, q] = rho_i(z_q) for N windows and Q_total grid points."""

    def __init__(self, densities, grid, window, kde, bandwidth):
        self.densities = densities
        self.grid = grid
        self.window = window
        self.kde = kde
        self.bandwidth = np.asarray(bandwidth, dtype=float)  # resolved h, reused out of sample

    @property
    def N(self):
        return self.densities.shape[0]

    @property
    def Q_total(self):
        return self.densities.shape[1]

    def describe(self):
        return {'N': self.N, 'Q_total': self.Q_total, 'grid': self.grid.construction,
                'kde': self.kde.describe(), 'bandwidth': self.bandwidth.tolist(),
                'window': self.window.describe()}

    def fingerprint(self):
        """Hash of everything a new window must share with training: grid, bandwidth, R, flags."""
        return utils.stable_hash(self.grid.points, self.bandwidth, self.window.R, self.kde.renormalize)


def kde_rows(windows, grid_points, h, renormalize=False):
    """
    Density rows for a block of windows (B, R, d) on the grid (Q, d).

    The sum over r runs in a fixed order, so a row does not depend on the other windows in the block.
    """
    B, R, d = windows.shape
    # differences are formed before scaling, which keeps translations exact up to rounding
    dist = cdist(windows.reshape(B * R, d), grid_points, 'seuclidean', V=h ** 2)
    sq = (dist ** 2).reshape(B, R, -1)
    norm = 1.0 / (np.prod(h) * (2.0 * math.pi) ** (d / 2.0))
    rows = np.exp(-0.5 * sq).sum(axis=1) * (norm / R)
    if renormalize:
        mass = rows.mean(axis=1)
        positive = mass > 0
        rows[positive] = rows[positive] / mass[positive, None]
    return rows


def estimate_densities(windows, grid, kde, window_spec=None, threads=1):
    """
    Evaluate rho_i(z_q) for every window and grid point.

    :param windows: (N, R, d) array from build_windows.
    :param grid: EvaluationGrid.
    :param kde: KdeSpec.
    :param threads: number of worker threads; blocks of rows are independent.
    :return: WindowDensityField.
    """
    N, R, d = windows.shape
    if grid.dim != d:
        raise ValidationError(f"Grid is {grid.dim}-dimensional, windows are {d}-dimensional.")
    h = kde.resolve(windows)
    densities = np.empty((N, grid.Q_total))
    block = max(1, _BLOCK_EVALUATIONS // (R * grid.Q_total))
    starts = list(range(0, N, block))

    def work(s):
        densities[s:s + block] = kde_rows(np.asarray(windows[s:s + block]), grid.points, h,
                                          kde.renormalize)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    else:
        for s in starts:
            work(s)
    if window_spec is None:
        window_spec = WindowSpec(R)
    logging.info('Estimated densities: N=%d windows, R=%d, Q_total=%d, h=%s.', N, R, grid.Q_total,
                 np.array2string(h, precision=4))
    return WindowDensityField(densities, grid, window_spec, kde, h)
