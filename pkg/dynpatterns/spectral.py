"""
Gaussian kernel on window measures, the alpha = 1 diffusion-maps normalization, and the Laplacian
eigenvectors (temporal patterns).

    G_ij = exp(-d2_ij / epsilon)          (0 on truncated edges)
    q = G 1,  G~ = G / (q q^T),  v = G~ 1,  H = V^{-1} G~,  H~ = V^{-1/2} G~ V^{-1/2}
    H~ psi_l = (1 - lambda_l) psi_l,  phi_l = v^{-1/2} psi_l,  L phi_l = lambda_l phi_l with L = I - H

psi_l are orthonormal under <a, b> = (1/N) sum_i a_i b_i; phi_l are orthonormal under the weights v_i / N.

"""

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from absl import logging

from dynpatterns.dynpatterns_core import ValidationError, NumericalError

# Largest N solved with the dense symmetric eigensolver; larger problems use Lanczos (eigsh).
DENSE_MAX_N = 4000


class KernelSpec():
    """
    Bandwidth of the Gaussian shape applied to squared distances.

    convention: 'main'     -- value is epsilon in exp(-d2/epsilon);
                'appendix' -- value is the width e~ with epsilon = 2 e~^2, i.e. exp(-d2/(2 e~^2)).
    The canonical `epsilon` attribute is always the exp(-d2/epsilon) bandwidth.
    """

    def __init__(self, value, convention='main'):
        if not value > 0:
            raise ValidationError(f"Kernel bandwidth must be positive, got {value}.")
        if convention == 'main':
            self.epsilon = float(value)
        elif convention == 'appendix':
            self.epsilon = 2.0 * float(value) ** 2
        else:
            raise ValidationError(f"Unknown epsilon convention '{convention}'.")
        self.value = float(value)
        self.convention = convention

    def describe(self):
        return {'value': self.value, 'convention': self.convention, 'epsilon': self.epsilon}


def kernel_matrix(dm, spec, sparse=False):
    """
    G_ij = exp(-d2_ij/epsilon) on kept edges, 0 on truncated edges; the diagonal is 1.

    :param sparse: return a scipy.sparse CSR matrix (kNN mode only).
    """
    G = np.exp(-dm.d2 / spec.epsilon)
    if dm.adjacency is not None:
        G = np.where(dm.adjacency, G, 0.0)
    np.fill_diagonal(G, 1.0)
    if sparse:
        return scipy.sparse.csr_matrix(G)
    return G


def _row_sums(A):
    return np.asarray(A.sum(axis=1)).ravel()


class NormalizedKernel():
    """The normalization chain of a kernel matrix: q, G~, v, H, H~."""

    def __init__(self, q, G_tilde, v, H, H_tilde):
        self.q = q
        self.G_tilde = G_tilde
        self.v = v
        self.H = H
        self.H_tilde = H_tilde

    @property
    def N(self):
        return self.q.size


def normalize(G):
    """
    alpha = 1 diffusion-maps normalization. H is row-stochastic and similar to the symmetric H~.

    Raises NumericalError when a vertex has no edge besides its self-loop.
    """
    N = G.shape[0]
    if N < 2:
        raise ValidationError("Normalization needs at least two windows.")
    diag = G.diagonal() if scipy.sparse.issparse(G) else np.diag(G)
    q = _row_sums(G)
    off = q - diag
    isolated = np.nonzero(~(off > 0))[0]
    if isolated.size > 0:
        raise NumericalError(f"Vertex {isolated[0]} is isolated ({isolated.size} isolated in total); "
                             f"increase k or epsilon.")
    if scipy.sparse.issparse(G):
        Dq = scipy.sparse.diags(1.0 / q)
        G_tilde = (Dq @ G @ Dq).tocsr()
        v = _row_sums(G_tilde)
        H = (scipy.sparse.diags(1.0 / v) @ G_tilde).tocsr()
        s = scipy.sparse.diags(1.0 / np.sqrt(v))
        H_tilde = (s @ G_tilde @ s).tocsr()
    else:
        G_tilde = G / np.outer(q, q)
        v = _row_sums(G_tilde)
        H = G_tilde / v[:, None]
        H_tilde = G_tilde / np.sqrt(np.outer(v, v))
    return NormalizedKernel(q, G_tilde, v, H, H_tilde)


class SpectralBasis():
    """
    The M leading eigenpairs.

    # Attributes:
    # 1: eigenvalues:  lambda_l, ascending, lambda_1 = 0.
    # 2. psi:  N x M, eigenvectors of H~ scaled so that (1/N) sum_i psi_{k,i} psi_{l,i} = delta_kl.
    # 3. phi:  N x M, phi_l = v^{-1/2} psi_l, eigenvectors of H and of L = I - H.
    # 4. v, q:  the normalization vectors.
    # 5. kernel:  the KernelSpec used; distance_hash: fingerprint of the distance matrix.
    """

    def __init__(self, eigenvalues, psi, phi, v, q, kernel=None, distance_hash=None):
        self.eigenvalues = eigenvalues
        self.psi = psi
        self.phi = phi
        self.v = v
        self.q = q
        self.kernel = kernel
        self.distance_hash = distance_hash

    @property
    def M(self):
        return self.eigenvalues.size

    @property
    def N(self):
        return self.psi.shape[0]

    def inner(self, a, b):
        """<a, b> under the uniform sampling measure."""
        return (np.asarray(a).T @ np.asarray(b)) / self.N

    def omega_inner(self, a, b):
        """<a, b> under the weights v_i / N."""
        return (np.asarray(a).T @ (self.v[:, None] * np.asarray(b).reshape(self.N, -1))) / self.N

    def truncate(self, M):
        M = int(M)
        return SpectralBasis(self.eigenvalues[:M], self.psi[:, :M], self.phi[:, :M], self.v, self.q,
                             self.kernel, self.distance_hash)

    def describe(self):
        return {'M': self.M, 'N': self.N, 'eigenvalues': self.eigenvalues.tolist(),
                'kernel': None if self.kernel is None else self.kernel.describe(),
                'distance_hash': self.distance_hash}


def fix_signs(vectors):
    """Flip each column so that its largest-magnitude entry (lowest index on ties) is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigendecompose(normalized, M, dense_max_n=DENSE_MAX_N, kernel=None, distance_hash=None):
    """
    Leading M eigenpairs of H~ (largest 1 - lambda), returned as a SpectralBasis.

    Dense symmetric solve for N <= dense_max_n, Lanczos (eigsh, tol 1e-10, at most 10 N iterations)
    above that.
    """
    H_tilde = normalized.H_tilde
    N = normalized.N
    if int(M) != M or M < 1 or M > N:
        raise ValidationError(f"M must be an integer in [1, {N}], got {M}.")
    M = int(M)
    sparse = scipy.sparse.issparse(H_tilde)
    if not sparse:
        asym = np.max(np.abs(H_tilde - H_tilde.T))
        if asym > 1e-12:
            raise ValidationError(f"H~ is not symmetric (max asymmetry {asym:.3g}).")

    if N <= dense_max_n or M >= N - 1:
        if N > dense_max_n:
            logging.warning('M=%d is too close to N=%d for Lanczos; using the dense solver.', M, N)
        dense = H_tilde.toarray() if sparse else H_tilde
        try:
            mu, vecs = scipy.linalg.eigh(dense, subset_by_index=[N - M, N - 1])
        except scipy.linalg.LinAlgError as err:
            raise NumericalError(f"Dense eigensolver failed: {err}") from err
    else:
        logging.info('N=%d exceeds %d; using Lanczos for %d eigenpairs.', N, dense_max_n, M)
        try:
            mu, vecs = scipy.sparse.linalg.eigsh(H_tilde, k=M, which='LA', tol=1e-10,
                                                 maxiter=10 * N, v0=np.ones(N))
        except scipy.sparse.linalg.ArpackNoConvergence as err:
            raise NumericalError(f"Lanczos eigensolver did not converge: {err}") from err

    lam = 1.0 - mu
    order = np.argsort(lam, kind='stable')
    lam = lam[order]
    psi = fix_signs(vecs[:, order]) * np.sqrt(N)
    phi = psi / np.sqrt(normalized.v)[:, None]
    logging.info('Spectrum: lambda_1=%.3g, lambda_2=%.6g, lambda_M=%.6g (M=%d).', lam[0],
                 lam[1] if M > 1 else np.nan, lam[-1], M)
    return SpectralBasis(lam, psi, phi, normalized.v, normalized.q, kernel, distance_hash)


def compute_basis(dm, spec, M, dense_max_n=DENSE_MAX_N):
    """Kernel matrix, normalization and eigendecomposition in one call."""
    sparse = dm.adjacency is not None and dm.N > dense_max_n
    normalized = normalize(kernel_matrix(dm, spec, sparse=sparse))
    return eigendecompose(normalized, M, dense_max_n, kernel=spec, distance_hash=dm.fingerprint())
