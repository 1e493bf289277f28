"""
First-order adiabatic elimination in the transport frame.

In the rotated picture ``rhobar = O^dag rho O`` with ``s = t / T`` the master
equation reads

    d rhobar / ds = i[Gbar, rhobar] + (1/eta) L_{-1}[rhobar],
    L_{-1}[X] = -(Dbar X + X Dbar^dag - 2 sum_k Gammabar_k X Gammabar_k^dag),

with ``eta = 1 / (gamma T)`` and every rate measured in units of the global
gap ``gamma``. The similarity transformation ``exp(i eta S1)`` removes the
coupling ``Gbar_off`` between the DFS and its complement to first order and
leaves ``(1/eta) L_{-1} + L_0 + eta L_1``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from holodyn import HolodynException
from holodyn import errno
from holodyn.dfs import build_D, dfs_propagators, g_off, global_gap, transport_frame
from holodyn.lindblad import dissipator
from holodyn.operators import (Subspace, commutator, dag, matexp, op_norm, restricted_inverse, spost, spre, sprepost,
                               unvec, vec)

logger = logging.getLogger(__name__)

INVARIANT_TOL = 1e-10
BLOCK_TOL = 1e-12


@dataclass
class AdiabaticOrders:
    """Rotated-frame operators at one grid point, rates in units of the gap."""

    s: float
    eta: float
    Pibar: np.ndarray
    Gbar: np.ndarray
    Gammabars: list
    Dbar: np.ndarray
    Dinv: np.ndarray = None
    S1: np.ndarray = None
    Htilde0: np.ndarray = None
    Htilde1: np.ndarray = None
    Htilde2: np.ndarray = None
    Lambdas: list = field(default_factory=list)
    Z: np.ndarray = None
    leakage: list = field(default_factory=list)

    @property
    def Pibar_perp(self):
        return np.eye(self.Pibar.shape[0]) - self.Pibar

    @property
    def Goff(self):
        return self.Pibar_perp @ self.Gbar @ self.Pibar


def _rotated_spaces(frame):
    V = dag(frame.O) @ frame.Pi.basis
    return Subspace(V), Subspace(dag(frame.O) @ frame.Pi.complement().basis)


def rotate_ops(frame, gammas, cs, gamma_gap):
    """
    ``Gammabar_k = (O^dag Gamma_k O - c_k) / sqrt(gamma)``, ``Dbar = O^dag D O / gamma``
    and ``Gbar = O^dag G O``.

    :param frame: DFSFrame at the point where ``gammas`` were evaluated.
    :param gamma_gap: Global gap bound, positive.
    :return: (Gammabars, Dbar, Gbar)
    """
    if not gamma_gap > 0:
        raise HolodynException(errno.EPARAM, 'gap bound must be positive, got %r' % gamma_gap)
    O = frame.O
    Od = dag(O)
    eye = np.eye(O.shape[0])
    root = np.sqrt(gamma_gap)
    Gammabars = [(Od @ g @ O - c * eye) / root for g, c in zip(gammas, cs)]
    D, _ = build_D(gammas, cs)
    return Gammabars, Od @ D @ O / gamma_gap, frame.Gbar


def s1_operator(orders):
    """
    ``S1 = Gbar_off^dag Dinv - Dinv Gbar_off`` with ``Dinv`` the inverse of the
    ``Pibar_perp`` block of ``Dbar``.

    With this sign the off-diagonal part of ``-eta Gbar - i Dbar + i eta [S1, -i Dbar]``
    cancels, so ``S1 Pibar = -Dinv Gbar_off``.
    """
    Goff = orders.Goff
    Dinv = orders.Dinv
    return dag(Goff) @ Dinv - Dinv @ Goff


def htilde_orders(orders):
    """
    :return: (H0, H1, H2) of the block diagonalized non-Hermitian generator.
    """
    Pi, Pc = orders.Pibar, orders.Pibar_perp
    Gbar = orders.Gbar
    H0 = -1j * orders.Dbar
    H1 = -Pi @ Gbar @ Pi - Pc @ Gbar @ Pc
    C = commutator(1j * orders.S1, Gbar)
    H2 = -0.5 * Pi @ C @ Pi - 0.5 * Pc @ C @ Pc
    return H0, H1, H2


def lindblad_like(Z, Lambdas):
    """Superoperator of ``X -> -i[Z, X] - sum_k (L^dag L X + X L^dag L - 2 L X L^dag)``."""
    return -1j * (spre(Z) - spost(Z)) + dissipator(Lambdas)


def l1_superop(orders):
    """
    First-order correction ``L_1`` built from ``Lambda_k = Gammabar_k S1`` and
    the Hermitian ``Z = i Gbar_off^dag (Dinv^dag - Dinv) Gbar_off``.
    """
    return lindblad_like(orders.Z, orders.Lambdas)


def l_minus1_superop(orders):
    """Fast dissipative part ``L_{-1}``, zero on every state supported by the DFS."""
    L = spre(orders.Dbar) + spost(dag(orders.Dbar))
    for g in orders.Gammabars:
        L -= 2 * sprepost(g, dag(g))
    return -L


def l0_generator(frame):
    """``Gbar_DF = Pibar Gbar Pibar``, zero in the gauge Q = 0."""
    Pibar = frame.Pibar
    return Pibar @ frame.Gbar @ Pibar


def l0_superop(orders):
    """``L_0 = -i[H1, .]``, the block diagonal part of the frame rotation."""
    H1 = -orders.Htilde1
    return 1j * (spre(H1) - spost(H1))


def adiabatic_orders(frame, path, eta, gamma_gap):
    """
    Every rotated-frame operator at one frame.

    :param frame: DFSFrame.
    :param path: The ReservoirPath the frame was transported along.
    :param eta: Adiabatic parameter ``1 / (gamma T)``.
    :param gamma_gap: Global gap bound, in the rate units of ``path``.
    :rtype: AdiabaticOrders
    """
    gammas, cs = path.eval(frame.s)
    Gammabars, Dbar, Gbar = rotate_ops(frame, gammas, cs, gamma_gap)
    inside, outside = _rotated_spaces(frame)
    Pibar = inside.projector
    for k, g in enumerate(Gammabars):
        if op_norm(g @ Pibar) > INVARIANT_TOL:
            raise HolodynException(errno.EINVARIANT, 'Gammabar_%d Pibar = %.3g at s=%g' % (k, op_norm(g @ Pibar), frame.s))
    orders = AdiabaticOrders(frame.s, eta, Pibar, Gbar, Gammabars, Dbar)
    if outside.dim:
        herm = dag(outside.basis) @ (0.5 * (Dbar + dag(Dbar))) @ outside.basis
        lowest = float(np.linalg.eigvalsh(herm)[0])
        if lowest < 1 - 1e-8:
            raise HolodynException(errno.EGAP, 'renormalized gap %.9g < 1 at s=%g, gap bound too large' % (lowest, frame.s))
    orders.Dinv = restricted_inverse(Dbar, outside)
    orders.S1 = s1_operator(orders)
    orders.Htilde0, orders.Htilde1, orders.Htilde2 = htilde_orders(orders)
    Goff = orders.Goff
    orders.Lambdas = [g @ orders.S1 for g in Gammabars]
    orders.Z = 1j * dag(Goff) @ (dag(orders.Dinv) - orders.Dinv) @ Goff
    orders.leakage = [op_norm(orders.Pibar_perp @ L @ Pibar) for L in orders.Lambdas]
    return orders


def orders_along(frames, path, eta, gamma_gap=None):
    gamma_gap = global_gap(frames) if gamma_gap is None else gamma_gap
    return [adiabatic_orders(f, path, eta, gamma_gap) for f in frames]


def block_norms(A, Pibar):
    """(diagonal, off-diagonal) block norms of ``A`` relative to ``Pibar``."""
    Pc = np.eye(Pibar.shape[0]) - Pibar
    diag = max(op_norm(Pibar @ A @ Pibar), op_norm(Pc @ A @ Pc))
    off = max(op_norm(Pibar @ A @ Pc), op_norm(Pc @ A @ Pibar))
    return diag, off


def block_residual(orders):
    """
    Off-diagonal block norm of ``exp(i eta S1) H exp(-i eta S1)`` for
    ``H = -eta Gbar - i Dbar``, second order in ``eta``.
    """
    eta = orders.eta
    H = -eta * orders.Gbar - 1j * orders.Dbar
    X = matexp(orders.S1, 1j * eta)
    Xinv = matexp(orders.S1, -1j * eta)
    return block_norms(X @ H @ Xinv, orders.Pibar)[1]


def deformed_projector(orders):
    """``Pibar + i eta (S1 Pibar - Pibar S1^dag)``, first order in ``eta``."""
    S1 = orders.S1
    return orders.Pibar + 1j * orders.eta * (S1 @ orders.Pibar - orders.Pibar @ dag(S1))


def s1_drift(first, second):
    """``||S1(s2) - S1(s1)|| / (s2 - s1)``, the size of the neglected dS/ds terms."""
    return op_norm(second.S1 - first.S1) / (second.s - first.s)


def expansion_diagnostics(frames, path, eta, gamma_gap=None, every=10):
    """
    Size of what the first-order expansion neglects or predicts along the loop.

    :param every: Use every n-th frame.
    :return: dict with ``max_s1_drift`` (largest ``||dS1/ds||``) and
             ``leakage_indicator`` (largest ``sum_k ||Pibar_perp Lambda_k Pibar||^2``).
    """
    if frames[0].Pi.dim == path.dim:
        return {'max_s1_drift': 0.0, 'leakage_indicator': 0.0}
    orders = orders_along(frames[::every], path, eta, gamma_gap)
    drift = max((s1_drift(a, b) for a, b in zip(orders, orders[1:])), default=0.0)
    indicator = max(sum(x ** 2 for x in o.leakage) for o in orders)
    logger.debug('%s eta=%g: max |dS1/ds| %.3e, leakage indicator %.3e', path.name, eta, drift, indicator)
    return {'max_s1_drift': float(drift), 'leakage_indicator': float(indicator)}


def rotated_generator(orders):
    """Superoperator of the full rotated equation ``i[Gbar, .] + (1/eta) L_{-1}``."""
    Gbar = orders.Gbar
    return 1j * (spre(Gbar) - spost(Gbar)) + l_minus1_superop(orders) / orders.eta


def effective_generator(orders):
    """``(1/eta) L_{-1} + L_0 + eta L_1``."""
    return l_minus1_superop(orders) / orders.eta + l0_superop(orders) + orders.eta * l1_superop(orders)


def evolve_expansion(orders, rho0, generator=effective_generator):
    """
    RK4 in ``s`` with the generator evaluated on ``orders``, which must sit on a
    uniform grid with an even number of intervals: points ``2j`` and ``2j + 2``
    are step ends and ``2j + 1`` the midpoint.

    :return: Final state.
    """
    if (len(orders) - 1) % 2 or len(orders) < 3:
        raise HolodynException(errno.EGRID, 'need an even number of intervals, got %d' % (len(orders) - 1))
    dim = rho0.shape[0]
    h = orders[2].s - orders[0].s
    x = vec(np.asarray(rho0, dtype=complex))
    for j in range(0, len(orders) - 1, 2):
        L0, Lm, L1 = generator(orders[j]), generator(orders[j + 1]), generator(orders[j + 2])
        k1 = L0 @ x
        k2 = Lm @ (x + h / 2 * k1)
        k3 = Lm @ (x + h / 2 * k2)
        k4 = L1 @ (x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return unvec(x, dim)


def first_order_discrepancy(path, eta, rho0, steps=None, gamma_gap=None):
    """
    DFS-block distance at ``s = 1`` between the full rotated evolution of
    ``rhobar`` and the first-order evolution of ``rhotilde``, transformed back.

    :param steps: RK4 steps in ``s``, default ``20 / eta``.
    :return: ``||Pibar (rhobar - rhoback) Pibar||``
    """
    steps = steps or int(np.ceil(20 / eta))
    frames = transport_frame(path, 2 * steps)
    orders = orders_along(frames, path, eta, gamma_gap)
    rho0 = np.asarray(rho0, dtype=complex)
    full = evolve_expansion(orders, rho0, rotated_generator)

    X0 = matexp(orders[0].S1, 1j * eta)
    tilde0 = X0 @ rho0 @ dag(X0)
    tilde = evolve_expansion(orders, tilde0 / np.trace(tilde0), effective_generator)
    X1inv = matexp(orders[-1].S1, -1j * eta)
    back = X1inv @ tilde @ dag(X1inv)
    back /= np.trace(back)
    Pibar = orders[-1].Pibar
    gap = op_norm(Pibar @ (full - back) @ Pibar)
    logger.debug('first-order discrepancy %.3g at eta=%g (%d steps)', gap, eta, steps)
    return gap


def predicted_leakage(frames, path, eta, rho0, gamma_gap=None):
    """
    Population lost from the DFS over one traversal according to ``L_1``:
    ``eta * int 2 sum_k tr(Pibar_perp Lambda_k rho_DF Lambda_k^dag) ds``,
    with ``rho_DF`` carried by the in-DFS propagator.

    :param rho0: Initial state supported by the DFS.
    """
    orders = orders_along(frames, path, eta, gamma_gap)
    V0 = frames[0].Pi.basis
    rates = []
    for o, W in zip(orders, dfs_propagators(frames)):
        X = V0 @ W @ dag(V0)
        rho = X @ rho0 @ dag(X)
        Pc = o.Pibar_perp
        rates.append(sum(2 * np.trace(Pc @ L @ rho @ dag(L)).real for L in o.Lambdas))
    return eta * float(trapezoid(rates, [o.s for o in orders]))
