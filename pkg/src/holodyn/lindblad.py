"""
Lab-frame master equation integrator.

    drho/dt = -i[H, rho] - sum_k (Gamma_k^dag Gamma_k rho + rho Gamma_k^dag Gamma_k - 2 Gamma_k rho Gamma_k^dag)

with ``Gamma_k(t) = Gamma_k(s = t / T)``. There is no factor 1/2 in front of the
anticommutator, so ``Gamma = sqrt(k)|0><1|`` empties ``|1>`` at rate ``2k``.
"""
import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from holodyn import HolodynException
from holodyn import errno
from holodyn.dfs import dfs_propagators, instantaneous_dfs
from holodyn.operators import (DEFAULT_REL_TOL, as_matrix, commutator, dag, fidelity, hermitian_defect, hermitize,
                               spost, spre, sprepost)

logger = logging.getLogger(__name__)

STABILITY_LIMIT = 0.1
TRACE_ABORT = 1e-6
MAX_STORED = 1000


def dissipator(gammas):
    """
    Dense superoperator of ``rho -> -sum_k (G^dag G rho + rho G^dag G - 2 G rho G^dag)``
    on column-stacked matrices.
    """
    dim = gammas[0].shape[0]
    L = np.zeros((dim * dim, dim * dim), dtype=complex)
    for g in gammas:
        gg = dag(g) @ g
        L -= spre(gg) + spost(gg) - 2 * sprepost(g, dag(g))
    return L


def liouvillian(gammas, H=None):
    """Dissipator plus ``-i[H, .]`` when a Hamiltonian is given."""
    L = dissipator(gammas)
    if H is not None:
        L += -1j * (spre(H) - spost(H))
    return L


def rhs(rho, gammas, H=None):
    """Right-hand side of the master equation in matrix form."""
    out = np.zeros_like(rho)
    if H is not None:
        out -= 1j * commutator(H, rho)
    for g in gammas:
        gd = dag(g)
        gg = gd @ g
        out -= gg @ rho + rho @ gg - 2 * g @ rho @ gd
    return out


def check_density(rho, tol=1e-8):
    """
    :return: ``rho`` as a complex matrix.
    :raises HolodynException: ESTATE unless Hermitian, unit trace and positive.
    """
    rho = as_matrix(rho, 'rho0')
    if hermitian_defect(rho) > tol:
        raise HolodynException(errno.ESTATE, 'rho0 is not Hermitian')
    if abs(np.trace(rho) - 1) > tol:
        raise HolodynException(errno.ESTATE, 'tr rho0 = %s' % np.trace(rho))
    if np.linalg.eigvalsh(hermitize(rho))[0] < -tol:
        raise HolodynException(errno.ESTATE, 'rho0 is not positive semidefinite')
    return rho


@dataclass
class Trajectory:
    """
    Stored states of one integration with their diagnostics.

    ``grid`` holds ``s = t / T`` of each stored state.
    """

    grid: np.ndarray
    states: list
    T: float
    steps: int
    trace: np.ndarray
    min_eig: np.ndarray
    dfs_pop: np.ndarray
    purity: np.ndarray
    path_name: str = ''
    max_hermitian_defect: float = 0.0

    @property
    def final(self):
        return self.states[-1]

    def check(self, trace_tol=1e-9, eig_tol=1e-8):
        """Raise EINVARIANT if a stored state drifted off the density matrices."""
        worst = float(np.max(np.abs(self.trace - 1)))
        if worst > trace_tol:
            raise HolodynException(errno.EINVARIANT, 'trace defect %.3g' % worst)
        if float(np.min(self.min_eig)) < -eig_tol:
            raise HolodynException(errno.EINVARIANT, 'negative eigenvalue %.3g' % np.min(self.min_eig))
        if float(np.max(self.purity)) > 1 + eig_tol:
            raise HolodynException(errno.EINVARIANT, 'purity %.12g above one' % np.max(self.purity))
        return self


def integrate(path, rho0, T, steps, H=None, rel_tol=DEFAULT_REL_TOL):
    """
    Fixed-step fourth-order Runge-Kutta in physical time ``t in [0, T]``.

    Every ``ceil(steps / 1000)``-th state is stored, and the final one always.

    :param path: ReservoirPath.
    :param rho0: Initial density matrix.
    :param T: Total time, in units of the inverse rate of the operators.
    :param steps: Number of RK4 steps; ``rate * T / steps`` must not exceed 0.1.
    :param H: Optional static Hamiltonian.
    :rtype: Trajectory
    """
    rho = check_density(rho0)
    if T <= 0:
        raise HolodynException(errno.EPARAM, 'T must be positive, got %r' % T)
    if H is not None:
        H = as_matrix(H, 'H')
        if hermitian_defect(H) > 1e-12 * max(1.0, float(np.linalg.norm(H, 2))):
            raise HolodynException(errno.ENOTHERMITIAN, 'H is not Hermitian')
    rate = path.rate_scale()
    if steps < 1 or rate * T / steps > STABILITY_LIMIT * (1 + 1e-9):
        raise HolodynException(errno.ESTABILITY,
                               'rate*T/steps = %.3g exceeds %.1f, use steps >= %d'
                               % (rate * T / max(steps, 1), STABILITY_LIMIT, math.ceil(rate * T / STABILITY_LIMIT)))
    stride = math.ceil(steps / MAX_STORED)
    dt = T / steps
    ds = 1.0 / steps

    grid, states = [], []
    diag = {'trace': [], 'min_eig': [], 'dfs_pop': [], 'purity': []}
    herm = 0.0

    def store(j, rho):
        s = j * ds
        grid.append(s)
        states.append(rho.copy())
        w = np.linalg.eigvalsh(rho)
        Pi = instantaneous_dfs(path, s, rel_tol)[0].projector
        diag['trace'].append(np.trace(rho).real)
        diag['min_eig'].append(w[0])
        diag['dfs_pop'].append(np.trace(Pi @ rho).real)
        diag['purity'].append(np.trace(rho @ rho).real)

    store(0, rho)
    ops_lo = path.eval(0.0)[0]
    for j in range(steps):
        s = j * ds
        ops_mid = path.eval(s + ds / 2)[0]
        ops_hi = path.eval(s + ds)[0]
        k1 = rhs(rho, ops_lo, H)
        k2 = rhs(rho + dt / 2 * k1, ops_mid, H)
        k3 = rhs(rho + dt / 2 * k2, ops_mid, H)
        k4 = rhs(rho + dt * k3, ops_hi, H)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        herm = max(herm, hermitian_defect(rho))
        rho = hermitize(rho)
        defect = abs(np.trace(rho) - 1)
        if not np.isfinite(defect) or defect > TRACE_ABORT:
            raise HolodynException(errno.ETRACE, 'trace defect %.3g at s=%g (step %d of %d)' % (defect, s + ds, j + 1, steps))
        ops_lo = ops_hi
        if (j + 1) % stride == 0 or j + 1 == steps:
            store(j + 1, rho)

    logger.debug('integrated %s: T=%g, %d steps, %d stored, final dfs population %.9f',
                 path.name, T, steps, len(states), diag['dfs_pop'][-1])
    return Trajectory(np.array(grid), states, T, steps,
                      np.array(diag['trace']), np.array(diag['min_eig']),
                      np.array(diag['dfs_pop']), np.array(diag['purity']),
                      path_name=path.name, max_hermitian_defect=herm)


@dataclass
class OverlapSeries:
    s: np.ndarray
    p: np.ndarray
    fidelity: np.ndarray
    block_fidelity: np.ndarray = field(default=None)

    @property
    def leakage(self):
        return 1.0 - self.p[-1]


def dfs_overlap(traj, frames, rho0=None):
    """
    DFS population and fidelity against the transported reference state.

    The reference is ``O(s) V0 W(s) V0^dag rho0 V0 W(s)^dag V0^dag O(s)^dag``,
    the initial state carried by the transport frame and the in-DFS propagator.
    ``fidelity`` compares the unnormalized DFS block (so leakage lowers it),
    ``block_fidelity`` the renormalized one.

    :param traj: Trajectory.
    :param frames: DFSFrame list on the same grid as ``traj``.
    :param rho0: Reference initial state, default the first stored state.
    :rtype: OverlapSeries
    """
    if len(frames) != len(traj.grid):
        raise HolodynException(errno.EGRID, 'trajectory has %d stored points, frames %d' % (len(traj.grid), len(frames)))
    offset = float(np.max(np.abs(np.array([f.s for f in frames]) - traj.grid)))
    if offset > 1e-12:
        raise HolodynException(errno.EGRID, 'frame and trajectory grids differ by up to %.3g in s' % offset)
    rho0 = traj.states[0] if rho0 is None else rho0
    V0 = frames[0].Pi.basis
    p, fid, bfid = [], [], []
    for frame, W, rho in zip(frames, dfs_propagators(frames), traj.states):
        X = frame.O @ V0 @ W @ dag(V0)
        ref = X @ rho0 @ dag(X)
        Pi = frame.Pi.projector
        blk = Pi @ rho @ Pi
        pop = np.trace(blk).real
        p.append(pop)
        fid.append(fidelity(blk, ref))
        bfid.append(fidelity(blk / pop, ref) if pop > 0 else 0.0)
    return OverlapSeries(traj.grid.copy(), np.array(p), np.array(fid), np.array(bfid))


def write_trajectory_csv(traj, filename, overlap=None):
    """One row per stored step: ``s,trace,min_eig,dfs_pop,fidelity``."""
    fid = overlap.fidelity if overlap is not None else [float('nan')] * len(traj.grid)
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['s', 'trace', 'min_eig', 'dfs_pop', 'fidelity'])
        for row in zip(traj.grid, traj.trace, traj.min_eig, traj.dfs_pop, fid):
            writer.writerow(['%.12g' % v for v in row])
