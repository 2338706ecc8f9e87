"""
Moments (and other time-averaged observables) of the window measures, their expansion in the
eigenbasis, truncated reconstruction and RMSE.

For an observable gamma, the statistic of window i is the time average

    J(gamma)_i = (1/R) sum_{r=0}^{R-1} gamma(y_{i-r}),

which for gamma = y^n is exactly the n-th raw moment of the window measure. Targets are expanded as

    c_l = (1/N) sum_i psi_{l,i} t_i = (1/N) sum_i v_i^{1/2} phi_{l,i} t_i,
    t^(M')_i = sum_{l <= M'} c_l psi_{l,i}.

"""

import numpy as np
from absl import logging

from dynpatterns.dynpatterns_core import ObservedTrajectory, ValidationError
from dynpatterns import measures, observable_bank

# Highest moment order accepted by default; high powers are badly conditioned.
MAX_MOMENT_ORDER = 6

STATISTIC_NAMES = {1: 'mean', 2: 'std', 3: 'skewness', 4: 'kurtosis'}


class ObservableSpec():
    """
    kind='moment' with order n, or kind='custom' with a registry name and its params.
    """

    def __init__(self, kind='moment', n=1, name=None, params=None, max_order=MAX_MOMENT_ORDER):
        if kind == 'moment':
            if int(n) != n or n < 1:
                raise ValidationError(f"Moment order must be an integer >= 1, got {n}.")
            if n > max_order:
                raise ValidationError(f"Moment order {n} exceeds the cap {max_order}.")
            self.name = 'power'
            self.params = {'n': int(n)}
        elif kind == 'custom':
            if name not in observable_bank.REGISTRY:
                raise ValidationError(f"Unknown observable '{name}', expected one of "
                                      f"{sorted(observable_bank.REGISTRY)}.")
            self.name = name
            self.params = dict(params or {})
        else:
            raise ValidationError(f"Unknown observable kind '{kind}'.")
        self.kind = kind
        self.fun = observable_bank.REGISTRY[self.name]

    def __call__(self, samples):
        return np.atleast_2d(self.fun(self.params, samples))

    def output_dim(self, d):
        # every registry entry acts componentwise
        return d

    def describe(self):
        return {'kind': self.kind, 'name': self.name, 'params': self.params}


def Moment(n, max_order=MAX_MOMENT_ORDER):
    return ObservableSpec('moment', n=n, max_order=max_order)


def time_average(traj, window, gamma):
    """Row i is (1/R) sum_r gamma(y_{i-r}), an N x m matrix."""
    values = gamma(traj.samples)
    vt = ObservedTrajectory(values, traj.dt, traj.n_presamples, provenance=traj.provenance)
    windows = measures.build_windows(vt, window)
    return windows.sum(axis=1) / window.R


def central_moments(raw, sd_floor=1e-12):
    """
    Mean, standard deviation, skewness and kurtosis per window from the raw moments 1..4.

    :param raw: dict or sequence with the raw moment matrices m1, m2, m3, m4 (each N x d).
    :return: dict with 'mean', 'std', 'skewness', 'kurtosis' and the boolean mask 'degenerate'.
        Degenerate windows (std < sd_floor) carry NaN skewness and kurtosis.
    """
    if isinstance(raw, dict):
        m1, m2, m3, m4 = (np.asarray(raw[n], dtype=float) for n in (1, 2, 3, 4))
    else:
        m1, m2, m3, m4 = (np.asarray(r, dtype=float) for r in raw[:4])
    var = m2 - m1 ** 2
    sd = np.sqrt(np.maximum(var, 0.0))
    degenerate = sd < sd_floor
    if np.any(degenerate):
        logging.warning('%d window components have zero spread; their skewness and kurtosis are NaN.',
                        int(np.sum(degenerate)))
    safe = np.where(degenerate, 1.0, sd)
    skew = (m3 - 3.0 * m1 * m2 + 2.0 * m1 ** 3) / safe ** 3
    kurt = (m4 - 4.0 * m1 * m3 + 6.0 * m1 ** 2 * m2 - 3.0 * m1 ** 4) / safe ** 4
    skew = np.where(degenerate, np.nan, skew)
    kurt = np.where(degenerate, np.nan, kurt)
    return {'mean': m1, 'std': sd, 'skewness': skew, 'kurtosis': kurt, 'degenerate': degenerate}


def window_targets(traj, window, moments=(1, 2, 3, 4), mode='statistics', max_order=MAX_MOMENT_ORDER):
    """
    Target columns for the requested moments.

    mode='statistics': n = 1..4 give mean, std, skewness, kurtosis (each computed per window, then
        expanded); undefined skewness/kurtosis of constant windows are set to 0.
    mode='raw': the raw moments E_n.
    :return: (targets N x (len(moments) d), labels)
    """
    d = traj.observation_dim
    moments = [int(n) for n in moments]
    if mode == 'raw':
        cols = [time_average(traj, window, Moment(n, max_order)) for n in moments]
        labels = [f'E{n}[{j}]' for n in moments for j in range(d)]
    elif mode == 'statistics':
        bad = [n for n in moments if n not in STATISTIC_NAMES]
        if bad:
            raise ValidationError(f"Statistics mode supports moments 1..4, got {bad}; use raw mode.")
        raw = {n: time_average(traj, window, Moment(n, max_order)) for n in (1, 2, 3, 4)}
        stats = central_moments(raw)
        if np.any(stats['degenerate']):
            logging.info('Undefined skewness and kurtosis targets are set to 0.')
        cols = [np.nan_to_num(stats[STATISTIC_NAMES[n]], nan=0.0) for n in moments]
        labels = [f'{STATISTIC_NAMES[n]}[{j}]' for n in moments for j in range(d)]
    else:
        raise ValidationError(f"Unknown reconstruction mode '{mode}'.")
    return np.column_stack(cols), labels


def _as_columns(targets, N):
    targets = np.asarray(targets, dtype=float)
    if targets.ndim == 1:
        targets = targets[:, None]
    if targets.shape[0] != N:
        raise ValidationError(f"Targets have {targets.shape[0]} rows, the basis has N={N}.")
    return targets


def expansion_coefficients(basis, targets):
    """c_l = <psi_l, targets> under the uniform sampling measure, an M x m matrix."""
    targets = _as_columns(targets, basis.N)
    return basis.psi.T @ targets / basis.N


def reconstruct(basis, c, M_prime):
    """Row i = sum_{l <= M'} c_l psi_{l,i}."""
    c = np.asarray(c, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    if int(M_prime) != M_prime or M_prime < 0 or M_prime > basis.M or M_prime > c.shape[0]:
        raise ValidationError(f"M' must be an integer in [0, {min(basis.M, c.shape[0])}], got {M_prime}.")
    M_prime = int(M_prime)
    if M_prime == 0:
        return np.zeros((basis.N, c.shape[1]))
    return basis.psi[:, :M_prime] @ c[:M_prime]


def rmse_report(true_values, reconstructions, normalize=False):
    """
    RMSE per truncation level and component: sqrt(sum_i (e^_i - e_i)^2 / N).

    With normalize, each true column is scaled to unit Euclidean norm and the same factor is applied
    to its reconstruction.

    :param reconstructions: dict M' -> N x m matrix.
    :return: dict M' -> array of m RMSE values.
    """
    true_values = np.asarray(true_values, dtype=float)
    if true_values.ndim == 1:
        true_values = true_values[:, None]
    N = true_values.shape[0]
    scale = np.ones(true_values.shape[1])
    if normalize:
        norms = np.linalg.norm(true_values, axis=0)
        zero = np.nonzero(norms == 0)[0]
        if zero.size:
            raise ValidationError(f"Cannot normalize zero column(s) {zero.tolist()}.")
        scale = 1.0 / norms
    table = {}
    for M_prime, recon in reconstructions.items():
        recon = np.asarray(recon, dtype=float)
        if recon.ndim == 1:
            recon = recon[:, None]
        if recon.shape != true_values.shape:
            raise ValidationError(f"Reconstruction for M'={M_prime} has shape {recon.shape}, "
                                  f"expected {true_values.shape}.")
        err = (recon - true_values) * scale
        table[M_prime] = np.sqrt(np.sum(err ** 2, axis=0) / N)
    return table


class MomentReconstruction():
    """
    # Attributes:
    # 1: true_values:  N x m target matrix.
    # 2. labels:  one name per column.
    # 3. coefficients:  M x m expansion coefficients.
    # 4. reconstructions:  dict M' -> N x m.
    # 5. rmse:  dict M' -> m RMSE values.
    # 6. normalized:  whether RMSE was computed on unit-norm columns.
    """

    def __init__(self, true_values, labels, coefficients, reconstructions, rmse, normalized):
        self.true_values = true_values
        self.labels = labels
        self.coefficients = coefficients
        self.reconstructions = reconstructions
        self.rmse = rmse
        self.normalized = normalized

    @property
    def truncations(self):
        return sorted(self.reconstructions)


def reconstruct_moments(basis, targets, truncations, normalize=False, labels=None):
    """True values, coefficients, truncated reconstructions and RMSE for a set of target columns."""
    targets = _as_columns(targets, basis.N)
    if labels is None:
        labels = [f'target[{j}]' for j in range(targets.shape[1])]
    c = expansion_coefficients(basis, targets)
    recons = {int(Mp): reconstruct(basis, c, Mp) for Mp in truncations}
    rmse = rmse_report(targets, recons, normalize)
    for Mp in sorted(recons):
        logging.info("M'=%d: RMSE %s.", Mp, np.array2string(rmse[Mp], precision=4))
    return MomentReconstruction(targets, list(labels), c, recons, rmse, normalize)


def raw_reconstruction_statistics(basis, traj, window, truncations, max_order=MAX_MOMENT_ORDER):
    """
    Reconstruct the raw moments 1..4, then convert each reconstruction to mean, std, skewness and
    kurtosis. The alternative to expanding the statistics directly.

    :return: dict M' -> dict of statistics (see central_moments).
    """
    raw_targets, _ = window_targets(traj, window, (1, 2, 3, 4), mode='raw', max_order=max_order)
    c = expansion_coefficients(basis, raw_targets)
    d = traj.observation_dim
    out = {}
    for Mp in truncations:
        recon = reconstruct(basis, c, Mp)
        out[int(Mp)] = central_moments({n: recon[:, (n - 1) * d:n * d] for n in (1, 2, 3, 4)})
    return out


def pattern_correlation(basis, targets, l=2):
    """
    Absolute correlation between the pattern psi_l (1-based l) and each target column, both
    normalized to unit Euclidean norm after removing their means.
    """
    targets = _as_columns(targets, basis.N)
    if l < 1 or l > basis.M:
        raise ValidationError(f"Eigenvector index l must lie in [1, {basis.M}], got {l}.")
    pattern = basis.psi[:, l - 1] - basis.psi[:, l - 1].mean()
    pattern = pattern / np.linalg.norm(pattern)
    centered = targets - targets.mean(axis=0)
    norms = np.linalg.norm(centered, axis=0)
    norms[norms == 0] = 1.0
    return np.abs(pattern @ (centered / norms))
