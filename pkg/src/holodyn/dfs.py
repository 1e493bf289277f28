"""
Instantaneous decoherence-free subspace and its transport frame.

The frame ``O(s)`` solves ``i dO/ds = G(s) O(s)`` with ``O(0) = 1`` and
``G = i[dPi/ds, Pi] + Q(s)``, so that ``O^dag Pi(s) O = Pi(0)``.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from holodyn import HolodynException
from holodyn import errno
from holodyn.operators import (DEFAULT_REL_TOL, Subspace, commutator, dag, hermitian_defect, hermitize, matexp,
                               nullspace, op_norm, polar_unitary)

logger = logging.getLogger(__name__)

RIGIDITY_TOL = 1e-6
RELATIVE_GAP_FLOOR = 1e-6

_GAUSS = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)


def build_D(gammas, cs):
    """
    ``D = sum_k (Gamma_k^dag Gamma_k - 2 c_k^* Gamma_k + |c_k|^2 1)`` and its
    Hermitian part ``P = (D + D^dag) / 2``.

    :param gammas: List of square matrices.
    :param cs: List of complex eigenvalues, same length.
    :return: (D, P)
    """
    if len(gammas) != len(cs):
        raise HolodynException(errno.ELENMISMATCH, '%d operators, %d eigenvalues' % (len(gammas), len(cs)))
    dim = gammas[0].shape[0]
    for k, g in enumerate(gammas):
        if g.shape != (dim, dim):
            raise HolodynException(errno.EDIMMISMATCH, 'Gamma_%d has shape %s, Gamma_0 %s' % (k, g.shape, (dim, dim)))
    eye = np.eye(dim, dtype=complex)
    D = np.zeros((dim, dim), dtype=complex)
    for g, c in zip(gammas, cs):
        D += dag(g) @ g - 2 * np.conj(c) * g + abs(c) ** 2 * eye
    return D, hermitize(D)


def instantaneous_dfs(path, s, rel_tol=DEFAULT_REL_TOL, gap_floor=0.0):
    """
    DFS at ``s`` as the kernel of ``D(s)``, with the gap of ``P(s)``.

    :param path: ReservoirPath.
    :param s: Path parameter.
    :param rel_tol: Relative singular value cutoff for the kernel.
    :param gap_floor: Absolute lower bound required of the gap.
    :return: (Subspace, gap)
    """
    gammas, cs = path.eval(s)
    D, P = build_D(gammas, cs)
    space = nullspace(D, rel_tol)
    if space.dim == 0:
        raise HolodynException(errno.ENODFS, 'D(s=%g) has an empty kernel' % s)
    common = nullspace(P, rel_tol)
    if common.dim != space.dim:
        raise HolodynException(errno.EINCONSISTENT,
                               'kernel of D(s=%g) has dim %d, common eigenspace has dim %d'
                               % (s, space.dim, common.dim))
    scale = max(1.0, op_norm(D))
    if op_norm(D @ space.basis) > 1e-10 * scale:
        raise HolodynException(errno.EINCONSISTENT, 'D(s=%g) Pi(s) = %.3g' % (s, op_norm(D @ space.basis)))
    for k, (g, c) in enumerate(zip(gammas, cs)):
        defect = op_norm(g @ space.basis - c * space.basis)
        if defect > 1e-9 * max(1.0, op_norm(g)):
            raise HolodynException(errno.EINCONSISTENT,
                                   'Gamma_%d v != c_%d v on the DFS at s=%g (%.3g)' % (k, k, s, defect))
    w = np.linalg.eigvalsh(P)
    gap = math.inf if space.dim == path.dim else float(w[space.dim])
    if gap < gap_floor or gap < RELATIVE_GAP_FLOOR * float(w[-1]):
        raise HolodynException(errno.EGAP, 'gap %.3g at s=%g below floor (largest rate %.3g)' % (gap, s, w[-1]))
    return space, gap


def projector_derivative(path, s, rel_tol=DEFAULT_REL_TOL):
    """
    ``dPi/ds``, from the path's analytic basis derivative when it has one and
    by a central difference of kernel projectors otherwise.
    """
    if path.basis is not None and path.basis_derivative is not None:
        V = path.basis(s)
        dV = path.basis_derivative(s)
        return dV @ dag(V) + V @ dag(dV)
    lo, hi = path.stencil(s, path.h)
    p_lo = instantaneous_dfs(path, lo, rel_tol)[0].projector
    p_hi = instantaneous_dfs(path, hi, rel_tol)[0].projector
    return (p_hi - p_lo) / (hi - lo)


def zero_gauge(s, Pi):
    return np.zeros_like(Pi)


def block_diagonal_gauge(H, profile=None):
    """
    Gauge provider ``Q(s) = f(s) (Pi H Pi + Pi_perp H Pi_perp)``.

    :param H: Hermitian matrix.
    :param profile: Optional smooth scalar function f(s), default 1.
    """
    H = hermitize(np.asarray(H, dtype=complex))

    def gauge(s, Pi):
        comp = np.eye(Pi.shape[0]) - Pi
        f = 1.0 if profile is None else profile(s)
        return f * (Pi @ H @ Pi + comp @ H @ comp)

    return gauge


def _check_gauge(Q, Pi, s):
    comp = np.eye(Pi.shape[0]) - Pi
    scale = max(1.0, op_norm(Q))
    if hermitian_defect(Q) > 1e-12 * scale or op_norm(Pi @ Q @ comp) > 1e-12 * scale:
        raise HolodynException(errno.ENOTHERMITIAN, 'gauge term at s=%g is not block diagonal Hermitian' % s)


def generator(path, s, gauge=zero_gauge, rel_tol=DEFAULT_REL_TOL, dim=None):
    """
    ``G(s) = i[dPi/ds, Pi] + Q(s)``.

    :param dim: Required DFS dimension; a different one is a level crossing.
    :return: (Subspace, gap, G, Q)
    """
    space, gap = instantaneous_dfs(path, s, rel_tol)
    if dim is not None and space.dim != dim:
        raise HolodynException(errno.EDIMJUMP, 'DFS dimension jump %d -> %d at s=%g' % (dim, space.dim, s))
    Pi = space.projector
    Q = gauge(s, Pi)
    _check_gauge(Q, Pi, s)
    G = 1j * commutator(projector_derivative(path, s, rel_tol), Pi) + Q
    return space, gap, hermitize(G), Q


@dataclass(frozen=True)
class DFSFrame:
    """Transport data at one grid point."""

    s: float
    Pi: Subspace
    gap: float
    O: np.ndarray
    G: np.ndarray
    Q: np.ndarray
    rigidity: float = 0.0

    @property
    def Pibar(self):
        """Rotated projector ``O^dag Pi(s) O``."""
        return dag(self.O) @ self.Pi.projector @ self.O

    @property
    def Gbar(self):
        return dag(self.O) @ self.G @ self.O


def _midpoint_step(path, s, ds, gauge, rel_tol, dim):
    G = generator(path, s + ds / 2, gauge, rel_tol, dim)[2]
    return matexp(G, -1j * ds)


def _magnus4_step(path, s, ds, gauge, rel_tol, dim):
    G1 = generator(path, s + _GAUSS[0] * ds, gauge, rel_tol, dim)[2]
    G2 = generator(path, s + _GAUSS[1] * ds, gauge, rel_tol, dim)[2]
    omega = -0.5j * ds * (G1 + G2) - (math.sqrt(3) / 12) * ds ** 2 * commutator(G2, G1)
    return matexp(omega)


STEPPERS = {'midpoint': _midpoint_step, 'magnus4': _magnus4_step}


def transport_frame(path, steps, gauge=zero_gauge, rel_tol=DEFAULT_REL_TOL, gap_floor=0.0,
                    method='magnus4', rigidity_tol=RIGIDITY_TOL):
    """
    Integrate the transport frame on the grid ``s_j = j / steps``.

    Each step multiplies by the exponential of the generator (midpoint rule or
    fourth-order Magnus with two Gauss points) and re-unitarizes by polar
    decomposition. Kernel bases are aligned to their predecessor by the
    orthogonal Procrustes rotation.

    :param path: ReservoirPath.
    :param steps: Number of steps, at least 100.
    :param gauge: callable(s, Pi) -> block diagonal Hermitian Q(s).
    :param method: 'magnus4' or 'midpoint'.
    :param rigidity_tol: Largest accepted ``||O^dag Pi O - Pi(0)||``, None to skip the check.
    :return: list of DFSFrame, ``steps + 1`` entries.
    """
    if steps < 100:
        raise HolodynException(errno.EPARAM, 'transport needs at least 100 steps, got %d' % steps)
    if method not in STEPPERS:
        raise HolodynException(errno.EPARAM, 'unknown transport method %r' % method)
    step = STEPPERS[method]
    ds = 1.0 / steps
    O = np.eye(path.dim, dtype=complex)
    frames = []
    previous = None
    Pi0 = None
    worst = 0.0
    for j in range(steps + 1):
        s = j * ds
        space, gap, G, Q = generator(path, s, gauge, rel_tol, None if previous is None else previous.dim)
        if gap < gap_floor:
            raise HolodynException(errno.EGAP, 'gap %.3g at s=%g below floor %.3g' % (gap, s, gap_floor))
        if previous is not None:
            space = space.aligned_to(previous)
        else:
            Pi0 = space.projector
        previous = space
        rigidity = op_norm(dag(O) @ space.projector @ O - Pi0)
        worst = max(worst, rigidity)
        if rigidity_tol is not None and rigidity > rigidity_tol:
            raise HolodynException(errno.ERIGIDITY,
                                   'frame rigidity %.3g at s=%g exceeds %.3g, refine steps=%d'
                                   % (rigidity, s, rigidity_tol, steps))
        frames.append(DFSFrame(s, space, gap, O, G, Q, rigidity))
        if j < steps:
            O = polar_unitary(step(path, s, ds, gauge, rel_tol, space.dim) @ O)
    logger.debug('transport %s: %d steps (%s), max rigidity defect %.3g', path.name, steps, method, worst)
    return frames


def g_off(frame):
    """``Pibar_perp Gbar Pibar``, the coupling of the DFS to its complement."""
    Pibar = frame.Pibar
    comp = np.eye(Pibar.shape[0]) - Pibar
    return comp @ frame.Gbar @ Pibar


def global_gap(frames):
    """Time-independent lower bound of the gap along the frames."""
    return min(f.gap for f in frames)


def dfs_propagators(frames):
    """
    In-DFS evolution ``W(s) = P exp(i int Gbar_DF)`` on the frame grid, as
    matrices on the basis of the s=0 DFS. Identity throughout for Q = 0.
    """
    V0 = frames[0].Pi.basis
    k = V0.shape[1]
    W = np.eye(k, dtype=complex)
    out = [W]
    g_prev = dag(V0) @ dag(frames[0].O) @ frames[0].Q @ frames[0].O @ V0
    for prev, frame in zip(frames[:-1], frames[1:]):
        g = dag(V0) @ dag(frame.O) @ frame.Q @ frame.O @ V0
        W = polar_unitary(matexp(hermitize(g + g_prev), 0.5j * (frame.s - prev.s)) @ W)
        out.append(W)
        g_prev = g
    return out
