"""
Holonomy of the decoherence-free subspace around closed reservoir loops.
"""
import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from holodyn import HolodynException
from holodyn import errno
from holodyn.dfs import dfs_propagators, instantaneous_dfs, transport_frame, zero_gauge
from holodyn.operators import Subspace, dag, embed, matexp, op_norm, polar_unitary, unitarity_defect

logger = logging.getLogger(__name__)

MIN_WILSON_STEPS = 500
CLOSURE_TOL = 1e-8
COARSE_TOL = 1e-6


def eigenphases(U):
    """Eigenphases in (-pi, pi], ascending."""
    phases = np.angle(np.linalg.eigvals(U))
    phases = np.where(phases <= -math.pi, phases + 2 * math.pi, phases)
    return np.sort(phases)


def phase_distance(a, b):
    """Distance of two angles modulo 2 pi."""
    return abs(math.remainder(a - b, 2 * math.pi))


@dataclass
class HolonomyResult:
    """
    Holonomy as a matrix on the DFS basis at s = 0.

    :ivar basis: The DFS basis the matrix refers to (columns).
    """

    U: np.ndarray
    phases: np.ndarray
    unitarity_defect: float
    basis: np.ndarray
    loop_descriptor: dict = field(default_factory=dict)

    @classmethod
    def from_matrix(cls, U, basis, **descriptor):
        return cls(U, eigenphases(U), unitarity_defect(U), basis, descriptor)

    @property
    def dim(self):
        return self.U.shape[0]

    def embedded(self):
        """``V U V^dag``, independent of the basis choice inside the DFS."""
        return embed(self.U, Subspace(self.basis))


def _check_closed(path):
    if not path.closed:
        raise HolodynException(errno.EOPENPATH, 'path %s is not declared closed' % path.name)
    P0 = instantaneous_dfs(path, 0.0)[0].projector
    P1 = instantaneous_dfs(path, 1.0)[0].projector
    if op_norm(P1 - P0) > CLOSURE_TOL:
        raise HolodynException(errno.EOPENPATH, '||Pi(1) - Pi(0)|| = %.3g on %s' % (op_norm(P1 - P0), path.name))


def _compress(frames, W=None):
    V0 = frames[0].Pi.basis
    U = dag(V0) @ frames[-1].O @ V0
    if W is not None:
        U = U @ W
    return polar_unitary(U)


def wilson_loop(path, steps, method='magnus4'):
    """
    Path-ordered product of ``exp(-i G(s) ds)`` with ``G = i[dPi/ds, Pi]``
    around the loop, later parameters to the left, compressed to the DFS at
    s = 0 and re-unitarized.

    :param path: Closed ReservoirPath.
    :param steps: Grid size, at least 500.
    :param method: Transport stepper, 'magnus4' or 'midpoint'.
    :rtype: HolonomyResult
    """
    _check_closed(path)
    if steps < MIN_WILSON_STEPS:
        raise HolodynException(errno.EPARAM, 'Wilson loop needs at least %d steps, got %d' % (MIN_WILSON_STEPS, steps))
    frames = transport_frame(path, steps, method=method)
    result = HolonomyResult.from_matrix(_compress(frames), frames[0].Pi.basis,
                                        loop=path.name, steps=steps, method=method)
    logger.debug('wilson loop %s: phases %s, unitarity defect %.3g', path.name, result.phases, result.unitarity_defect)
    return result


def frame_holonomy(path, steps, gauge=zero_gauge, method='magnus4'):
    """
    Holonomy through the transport frame in an arbitrary gauge: the frame
    endpoint ``V0^dag O(1) V0`` corrected by the in-DFS propagator ``W(1)``.
    """
    _check_closed(path)
    frames = transport_frame(path, steps, gauge=gauge, method=method)
    W = dfs_propagators(frames)[-1]
    return HolonomyResult.from_matrix(_compress(frames, W), frames[0].Pi.basis, loop=path.name, steps=steps,
                                      method=method, gauge=getattr(gauge, '__name__', 'custom'))


def gauge_invariance_check(path, Q1, Q2, steps):
    """
    Largest distance between the Wilson loop and the frame holonomies built in
    the gauges ``Q1`` and ``Q2``.

    :param Q1: Gauge provider callable(s, Pi), None for Q = 0.
    :param Q2: Gauge provider callable(s, Pi), None for Q = 0.
    :return: Max spectral-norm discrepancy of the embedded holonomies.
    """
    reference = wilson_loop(path, steps).embedded()
    worst = 0.0
    for gauge in (Q1, Q2):
        U = frame_holonomy(path, steps, zero_gauge if gauge is None else gauge).embedded()
        worst = max(worst, op_norm(U - reference))
    logger.debug('gauge invariance on %s: %.3g', path.name, worst)
    return worst


def noncommutativity(pathA, pathB, steps):
    """``||U_A U_B - U_B U_A||`` for two loops based at the same DFS."""
    PA = instantaneous_dfs(pathA, 0.0)[0].projector
    PB = instantaneous_dfs(pathB, 0.0)[0].projector
    if PA.shape != PB.shape or op_norm(PA - PB) > CLOSURE_TOL:
        raise HolodynException(errno.EDFSMISMATCH, 'loops %s and %s start from different DFS' % (pathA.name, pathB.name))
    UA = wilson_loop(pathA, steps).embedded()
    UB = wilson_loop(pathB, steps).embedded()
    return op_norm(UA @ UB - UB @ UA)


def frame_bases(frames):
    """Kato-gauge basis ``O(s) V0`` along the frames."""
    V0 = frames[0].Pi.basis
    return [f.O @ V0 for f in frames]


def connection(frame_chain, lambda_params):
    """
    Connection components ``A = -V^dag dV/dlambda`` on a one-parameter grid.

    :param frame_chain: Orthonormal DFS bases (dim x k arrays) of a smooth gauge,
                        or DFSFrame objects, whose Kato basis is used.
    :param lambda_params: Grid values, same length.
    :return: list of k x k anti-Hermitian matrices.
    """
    chain = list(frame_chain)
    if chain and hasattr(chain[0], 'O'):
        chain = frame_bases(chain)
    lam = np.asarray(lambda_params, dtype=float)
    if len(chain) != len(lam) or len(lam) < 3:
        raise HolodynException(errno.EGRID, '%d bases on %d grid points' % (len(chain), len(lam)))
    V = np.stack(chain)
    dV = np.gradient(V, lam, axis=0, edge_order=2)
    A = [-dag(v) @ d for v, d in zip(V, dV)]
    defect = max(op_norm(a + dag(a)) for a in A)
    if defect > COARSE_TOL:
        raise HolodynException(errno.ECOARSE, 'connection anti-Hermiticity defect %.3g, refine the grid' % defect)
    return A


def path_ordered_exp(generators, lambda_params):
    """
    ``P exp(int A dlambda)`` with the trapezoid value of ``A`` on each interval,
    later parameters to the left.
    """
    k = generators[0].shape[0]
    U = np.eye(k, dtype=complex)
    for j in range(len(generators) - 1):
        step = lambda_params[j + 1] - lambda_params[j]
        U = matexp(0.5 * (generators[j] + generators[j + 1]), step) @ U
    return U


def connection_holonomy(path, points=10001):
    """
    Holonomy from the connection of the path's own smooth gauge, an
    independent route to :func:`wilson_loop`. Requires ``path.basis``.
    """
    if path.basis is None:
        raise HolodynException(errno.EPARAM, 'path %s has no basis gauge' % path.name)
    grid = np.linspace(0.0, 1.0, points)
    bases = [path.basis(s) for s in grid]
    U = path_ordered_exp(connection(bases, grid), grid)
    # the gauge basis is single valued, so V(1) = V(0) needs no correction
    return HolonomyResult.from_matrix(polar_unitary(U), bases[0], loop=path.name, steps=points - 1, method='connection')


def wilson_loops(paths, steps, jobs=1):
    """Wilson loops of several paths, results in input order."""
    if jobs <= 1:
        return [wilson_loop(p, steps) for p in paths]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda p: wilson_loop(p, steps), paths))


def write_holonomy_csv(results, filename, loop_ids=None):
    """``loop_id,dim_dfs,phase_1..phase_d,unitarity_defect``, d the largest DFS dimension."""
    width = max(r.dim for r in results)
    loop_ids = loop_ids or [r.loop_descriptor.get('loop', str(i)) for i, r in enumerate(results)]
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['loop_id', 'dim_dfs'] + ['phase_%d' % (i + 1) for i in range(width)] + ['unitarity_defect'])
        for loop_id, r in zip(loop_ids, results):
            phases = ['%.12g' % p for p in r.phases] + [''] * (width - r.dim)
            writer.writerow([loop_id, r.dim] + phases + ['%.3e' % r.unitarity_defect])
