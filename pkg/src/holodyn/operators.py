"""
Dense complex operator substrate.

Operators are plain ``numpy`` arrays of dtype complex128. Functions never modify
their inputs. Superoperators act on column-stacked density matrices, so that
``vec(A X B) = (B^T kron A) vec(X)``.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from holodyn import HolodynException
from holodyn import errno

logger = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-9
# bases built from transported frames carry accumulated rounding
ORTHONORMAL_TOL = 1e-10


def as_matrix(A, name='operator'):
    """
    Validate and convert to a square, finite complex matrix.

    :param A: Array-like operator.
    :param name: Used in the error message.
    :return: complex128 array, a copy when the input was not complex128 already.
    :rtype: numpy.ndarray
    """
    try:
        M = np.asarray(A, dtype=complex)
    except (TypeError, ValueError):
        raise HolodynException(errno.ENOTSQUARE, '%s is not a rectangular array' % name)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise HolodynException(errno.ENOTSQUARE, '%s has shape %s' % (name, M.shape))
    if not np.all(np.isfinite(M)):
        raise HolodynException(errno.ENONFINITE, '%s has non-finite entries' % name)
    return M


def dag(A):
    return A.conj().T


def commutator(A, B):
    return A @ B - B @ A


def anticommutator(A, B):
    return A @ B + B @ A


def op_norm(A):
    """Spectral norm (largest singular value)."""
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def hermitian_defect(A):
    return op_norm(A - dag(A))


def unitarity_defect(U):
    return op_norm(dag(U) @ U - np.eye(U.shape[1]))


def hermitize(A):
    return 0.5 * (A + dag(A))


def matexp(A, scale=1.0):
    """
    Matrix exponential ``exp(scale * A)`` by scaling and squaring with Pade
    approximants.

    :param A: Square matrix.
    :param scale: Complex factor applied before exponentiating.
    :rtype: numpy.ndarray
    """
    A = as_matrix(A)
    return scipy.linalg.expm(scale * A)


def polar_unitary(A):
    """Closest unitary to ``A`` (unitary factor of the polar decomposition)."""
    U, _ = scipy.linalg.polar(A)
    return U


def eigh(A):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    return scipy.linalg.eigh(hermitize(as_matrix(A)))


def psd_sqrt(A):
    """Square root of a positive semidefinite Hermitian matrix."""
    w, V = eigh(A)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ dag(V)


def fidelity(rho, sigma):
    """
    Uhlmann fidelity ``(tr sqrt(sqrt(sigma) rho sqrt(sigma)))**2``.

    Neither argument is renormalized, so population missing from ``rho`` lowers
    the value.
    """
    root = psd_sqrt(sigma)
    w = scipy.linalg.eigvalsh(hermitize(root @ rho @ root))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)


@dataclass(frozen=True)
class Subspace:
    """
    Subspace of C^n given by an orthonormal basis (as columns).

    An empty subspace has a basis of shape ``(n, 0)``.
    """

    basis: np.ndarray

    def __post_init__(self):
        basis = np.array(self.basis, dtype=complex)
        if basis.ndim != 2:
            raise HolodynException(errno.EDIMMISMATCH, 'basis must be a 2-d array')
        defect = op_norm(dag(basis) @ basis - np.eye(basis.shape[1])) if basis.shape[1] else 0.0
        if defect > ORTHONORMAL_TOL:
            raise HolodynException(errno.ENOTORTHONORMAL, 'basis columns off orthonormal by %.3g' % defect)
        basis.setflags(write=False)
        object.__setattr__(self, 'basis', basis)

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def projector(self):
        return self.basis @ dag(self.basis)

    def complement(self):
        """Orthonormal basis of the orthogonal complement."""
        if self.dim == 0:
            return Subspace(np.eye(self.ambient_dim, dtype=complex))
        comp = scipy.linalg.null_space(dag(self.basis))
        return Subspace(comp)

    def aligned_to(self, reference):
        """
        Same subspace, basis rotated by the orthogonal Procrustes solution so
        that it is as close as possible to ``reference``.

        :param reference: Subspace of equal dimension.
        :rtype: Subspace
        """
        if reference.dim != self.dim or reference.ambient_dim != self.ambient_dim:
            raise HolodynException(errno.EDIMJUMP,
                                   'cannot align a %d-dim basis to a %d-dim one' % (self.dim, reference.dim))
        if self.dim == 0:
            return self
        return Subspace(self.basis @ procrustes(self.basis, reference.basis))


def procrustes(V, W):
    """Unitary R minimizing ``||V R - W||`` (Frobenius)."""
    U, _, Vh = scipy.linalg.svd(dag(V) @ W)
    return U @ Vh


def nullspace(A, rel_tol=DEFAULT_REL_TOL):
    """
    Orthonormal basis of the singular vectors with ``sigma_i <= rel_tol * sigma_max``.

    A zero matrix has the whole space as nullspace.

    :param A: Square matrix.
    :param rel_tol: Relative singular value threshold in (0, 1).
    :rtype: Subspace
    """
    A = as_matrix(A)
    if not 0.0 < rel_tol < 1.0:
        raise HolodynException(errno.EPARAM, 'rel_tol=%r outside (0, 1)' % rel_tol)
    _, sv, Vh = scipy.linalg.svd(A)
    sigma_max = sv[0]
    if sigma_max == 0.0:
        return Subspace(np.eye(A.shape[0], dtype=complex))
    mask = sv <= rel_tol * sigma_max
    return Subspace(dag(Vh[mask]))


def block(A, rows, cols):
    """
    Compress ``A`` between two subspaces: ``rows.basis^dag A cols.basis``.

    :type rows: Subspace
    :type cols: Subspace
    """
    A = as_matrix(A)
    n = A.shape[0]
    if rows.ambient_dim != n or cols.ambient_dim != n:
        raise HolodynException(errno.EDIMMISMATCH,
                               'operator dim %d, subspaces %d and %d' % (n, rows.ambient_dim, cols.ambient_dim))
    return dag(rows.basis) @ A @ cols.basis


def embed(B, subspace):
    """Inverse of :func:`block` on a single subspace: ``V B V^dag``."""
    return subspace.basis @ B @ dag(subspace.basis)


def restricted_inverse(A, subspace):
    """
    Inverse of the block of ``A`` on ``subspace``, embedded back into the full
    space (zero on the complement).
    """
    M = block(A, subspace, subspace)
    if M.size == 0:
        return np.zeros_like(A)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e12:
        raise HolodynException(errno.EGAP, 'singular block, condition number %.3g' % cond)
    return embed(scipy.linalg.inv(M), subspace)


def vec(rho):
    """Column-stacking of a matrix."""
    return np.asarray(rho).reshape(-1, order='F')


def unvec(v, dim):
    return np.asarray(v).reshape((dim, dim), order='F')


def spre(A):
    """Superoperator of ``X -> A X``."""
    return np.kron(np.eye(A.shape[0]), A)


def spost(A):
    """Superoperator of ``X -> X A``."""
    return np.kron(A.T, np.eye(A.shape[0]))


def sprepost(A, B):
    """Superoperator of ``X -> A X B``."""
    return np.kron(B.T, A)


def random_hermitian(rng, dim, scale=1.0):
    X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * hermitize(X)


def random_density(rng, subspace):
    """Random full-rank density matrix supported on ``subspace``."""
    k = subspace.dim
    X = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    small = X @ dag(X)
    small /= np.trace(small).real
    return embed(small, subspace)
