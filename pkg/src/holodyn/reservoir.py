"""
Smooth families of Lindblad operators and the built-in verification scenarios.

A path is parameterized by ``s`` in [0, 1]. Each evaluation returns the
operators ``Gamma_k(s)`` (in units of sqrt(rate)) and their common eigenvalues
``c_k(s)``.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from holodyn import HolodynException
from holodyn import errno
from holodyn.operators import as_matrix, dag, nullspace, DEFAULT_REL_TOL

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
CLOSURE_TOL = 1e-8


class ReservoirPath:
    """
    Parameterized environment ``s -> {Gamma_k(s), c_k(s)}``.

    :param dim: Hilbert space dimension.
    :param operators: callable(s) -> list of dim x dim matrices.
    :param eigenvalues: callable(s) -> list of complex, one per operator.
    :param closed: Whether the path claims ``Pi(1) == Pi(0)``.
    :param h: Finite-difference step used for derivatives.
    :param basis: Optional callable(s) -> dim x k orthonormal DFS basis, smooth
                  and single valued along the path (a fixed gauge).
    :param basis_derivative: Optional callable(s) -> d basis / ds.
    :param name: Label used in reports.
    """

    def __init__(self, dim, operators, eigenvalues, closed=False, h=DEFAULT_STEP,
                 basis=None, basis_derivative=None, name='path'):
        self.dim = dim
        self._operators = operators
        self._eigenvalues = eigenvalues
        self.closed = closed
        self.h = h
        self.basis = basis
        self.basis_derivative = basis_derivative
        self.name = name
        self.num_ops = len(operators(0.0))

    def eval(self, s):
        """
        :param s: Path parameter.
        :return: (gammas, cs)
        """
        gammas = [np.asarray(g, dtype=complex) for g in self._operators(s)]
        cs = [complex(c) for c in self._eigenvalues(s)]
        return gammas, cs

    def wrap(self, s):
        """Map ``s`` outside [0, 1] back onto the loop (closed paths only)."""
        if self.closed:
            return s - math.floor(s)
        return min(max(s, 0.0), 1.0)

    def derivative(self, s, h=None):
        """Central finite-difference derivative of the operators."""
        h = self.h if h is None else h
        lo, hi = self.stencil(s, h)
        g_lo, _ = self.eval(lo)
        g_hi, _ = self.eval(hi)
        return [(b - a) / (hi - lo) for a, b in zip(g_lo, g_hi)]

    def richardson_defect(self, s, h=None):
        """``max_k ||Gamma_k'(h) - Gamma_k'(h/2)||``, an O(h^2) smoothness probe."""
        h = self.h if h is None else h
        d1 = self.derivative(s, h)
        d2 = self.derivative(s, h / 2)
        return max(float(np.linalg.norm(a - b, 2)) for a, b in zip(d1, d2))

    def stencil(self, s, h):
        """Two sample points for a difference quotient at ``s``, centred where the path allows."""
        if self.closed or h <= s <= 1.0 - h:
            return s - h, s + h
        if s < h:
            return s, s + 2 * h
        return s - 2 * h, s

    def rate_scale(self, samples=8):
        """Largest decay rate met along the path (largest eigenvalue of P)."""
        from holodyn.dfs import build_D
        rate = 0.0
        for s in np.linspace(0.0, 1.0, samples):
            gammas, cs = self.eval(s)
            _, P = build_D(gammas, cs)
            rate = max(rate, float(np.linalg.eigvalsh(P)[-1]))
        return rate

    def reparameterize(self, warp, dwarp, name=None):
        """
        Same loop traversed as ``s -> warp(s)``.

        :param warp: Monotone smooth map of [0, 1] onto itself.
        :param dwarp: Its derivative.
        """
        basis = None
        basis_derivative = None
        if self.basis is not None:
            basis = lambda s: self.basis(warp(s))
        if self.basis_derivative is not None:
            basis_derivative = lambda s: dwarp(s) * self.basis_derivative(warp(s))
        return ReservoirPath(self.dim, lambda s: self._operators(warp(s)), lambda s: self._eigenvalues(warp(s)),
                             closed=self.closed, h=self.h, basis=basis, basis_derivative=basis_derivative,
                             name=name or '%s~warped' % self.name)

    def reversed(self):
        return self.reparameterize(lambda s: 1.0 - s, lambda s: -1.0, name='%s~reversed' % self.name)

    def then(self, other):
        """
        Concatenation: ``self`` on [0, 1/2], ``other`` on [1/2, 1].

        The velocity may jump at s = 1/2.
        """
        if other.dim != self.dim:
            raise HolodynException(errno.EDIMMISMATCH, 'cannot join paths of dim %d and %d' % (self.dim, other.dim))

        def pick(first, second):
            return lambda s: first(2 * s) if s < 0.5 else second(2 * s - 1)

        basis = None
        basis_derivative = None
        if self.basis is not None and other.basis is not None:
            basis = pick(self.basis, other.basis)
        if self.basis_derivative is not None and other.basis_derivative is not None:
            basis_derivative = pick(lambda s: 2 * self.basis_derivative(s), lambda s: 2 * other.basis_derivative(s))
        return ReservoirPath(self.dim, pick(self._operators, other._operators),
                             pick(self._eigenvalues, other._eigenvalues),
                             closed=self.closed and other.closed, h=min(self.h, other.h),
                             basis=basis, basis_derivative=basis_derivative,
                             name='%s*%s' % (other.name, self.name))


@dataclass(frozen=True)
class Scenario:
    """
    A path together with an initial DFS state and, where known, analytic
    reference values.

    ``expected`` keys: ``berry_phase`` (radians) for one-dimensional DFS
    scenarios, ``trivial`` when the holonomy must be the identity.
    """

    name: str
    path: ReservoirPath
    rho0: np.ndarray
    expected: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    builder: Optional[Callable] = None

    def __post_init__(self):
        check_state(self.rho0, self.path)

    def rebuild(self, **overrides):
        """Build the same scenario with some parameters replaced (e.g. ``kappa``)."""
        if self.builder is None:
            raise HolodynException(errno.EPARAM, 'scenario %s cannot be rebuilt' % self.name)
        params = dict(self.params)
        params.update(overrides)
        return self.builder(**params)


def check_state(rho0, path, rel_tol=DEFAULT_REL_TOL):
    """Validate that ``rho0`` is a density matrix supported on the DFS at s=0."""
    from holodyn.dfs import build_D
    rho0 = as_matrix(rho0, 'rho0')
    if np.linalg.norm(rho0 - dag(rho0), 2) > 1e-12:
        raise HolodynException(errno.ESTATE, 'rho0 is not Hermitian')
    if abs(np.trace(rho0) - 1.0) > 1e-12:
        raise HolodynException(errno.ESTATE, 'rho0 has trace %r' % np.trace(rho0))
    if np.linalg.eigvalsh(rho0)[0] < -1e-12:
        raise HolodynException(errno.ESTATE, 'rho0 is not positive semidefinite')
    gammas, cs = path.eval(0.0)
    D, _ = build_D(gammas, cs)
    space = nullspace(D, rel_tol)
    outside = np.eye(path.dim) - space.projector
    if np.linalg.norm(outside @ rho0, 2) > 1e-10:
        raise HolodynException(errno.ESTATE, 'rho0 is not supported on the DFS at s=0')
    return rho0


def _ket(*amps):
    return np.array(amps, dtype=complex).reshape(-1, 1)


def _dark_pair(kappa, bright, excited):
    root = math.sqrt(kappa)
    return [root * excited @ dag(bright), root * bright @ dag(excited)]


def scenario_dark_state(theta, kappa=1.0):
    """
    Three-level dark state loop, basis {|0>, |1>, |e>}.

    The bright state ``cos(theta)|0> + exp(2 pi i s) sin(theta)|1>`` is pumped to
    |e> and back; the dark state orthogonal to it in span{|0>, |1>} forms a
    one-dimensional DFS whose Berry phase after one loop is ``2 pi sin^2(theta)``.
    """
    if not 0.0 < theta < math.pi / 2:
        raise HolodynException(errno.EPARAM, 'theta=%r at or beyond an endpoint: DFS dimension jump' % theta)
    if kappa <= 0:
        raise HolodynException(errno.EPARAM, 'kappa=%r must be positive' % kappa)
    ct, st = math.cos(theta), math.sin(theta)
    excited = _ket(0, 0, 1)

    def operators(s):
        bright = _ket(ct, np.exp(2j * math.pi * s) * st, 0)
        return _dark_pair(kappa, bright, excited)

    def basis(s):
        return _ket(-np.exp(-2j * math.pi * s) * st, ct, 0)

    def basis_derivative(s):
        return _ket(2j * math.pi * np.exp(-2j * math.pi * s) * st, 0, 0)

    path = ReservoirPath(3, operators, lambda s: [0.0, 0.0], closed=True,
                         basis=basis, basis_derivative=basis_derivative, name='dark_state')
    dark = basis(0.0)
    phase = 2 * math.pi * st ** 2
    return Scenario('dark_state', path, dark @ dag(dark),
                    expected={'berry_phase': math.remainder(phase, 2 * math.pi)},
                    params={'theta': theta, 'kappa': kappa}, builder=scenario_dark_state)


@dataclass(frozen=True)
class Loop:
    """
    Closed curve ``s -> (theta, phi, chi)`` on the bright-state sphere.

    ``chi`` is a relative phase on the |2> component; it is what lets two loops
    based at the same point produce non-commuting holonomies.
    """

    theta: Callable
    phi: Callable
    chi: Callable
    dtheta: Callable
    dphi: Callable
    dchi: Callable
    name: str = 'loop'

    def point(self, s):
        return self.theta(s), self.phi(s), self.chi(s)

    def velocity(self, s):
        return self.dtheta(s), self.dphi(s), self.dchi(s)


def _const(value):
    return lambda s: value


def constant_loop(theta0, phi0=0.0):
    return Loop(_const(theta0), _const(phi0), _const(0.0), _const(0.0), _const(0.0), _const(0.0), name='constant')


def phi_circle(theta0):
    """Circle of latitude at ``theta0`` starting from phi = 0."""
    two_pi = 2 * math.pi
    return Loop(_const(theta0), lambda s: two_pi * s, _const(0.0),
                _const(0.0), _const(two_pi), _const(0.0), name='phi_circle')


def theta_excursion(theta0, amplitude=0.3):
    """
    Excursion in theta at phi = 0 while the relative phase chi winds once.

    Starts at (theta0, 0, 0), same base point as :func:`phi_circle`.
    """
    two_pi = 2 * math.pi
    return Loop(lambda s: theta0 + amplitude * math.sin(two_pi * s), _const(0.0), lambda s: two_pi * s,
                lambda s: two_pi * amplitude * math.cos(two_pi * s), _const(0.0), _const(two_pi),
                name='theta_excursion')


def loop_from_points(points):
    """
    Periodic cubic spline through tabulated ``[theta, phi]`` or
    ``[theta, phi, chi]`` samples taken at equally spaced s.

    The last sample must repeat the first one.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 4 or pts.shape[1] not in (2, 3):
        raise HolodynException(errno.EPARAM, 'loop needs at least 4 points of [theta, phi(, chi)]')
    if pts.shape[1] == 2:
        pts = np.hstack([pts, np.zeros((pts.shape[0], 1))])
    if np.max(np.abs(pts[-1] - pts[0])) > CLOSURE_TOL:
        raise HolodynException(errno.ENOTCLOSED, 'loop not closed within %g' % CLOSURE_TOL)
    pts[-1] = pts[0]
    grid = np.linspace(0.0, 1.0, pts.shape[0])
    splines = [CubicSpline(grid, pts[:, i], bc_type='periodic') for i in range(3)]
    derivs = [sp.derivative() for sp in splines]
    wrap = lambda f: (lambda s: float(f(s - math.floor(s))))
    return Loop(*(wrap(f) for f in splines), *(wrap(f) for f in derivs), name='tabulated')


def _tripod_vectors(theta, phi, chi):
    st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(phi), math.cos(phi)
    ph = np.exp(1j * chi)
    bright = _ket(st * cp, st * sp, ph * ct, 0)
    e1 = _ket(ct * cp, ct * sp, -ph * st, 0)
    e2 = _ket(-sp, cp, 0, 0)
    return bright, np.hstack([e1, e2])


def _tripod_basis_derivative(theta, phi, chi, dtheta, dphi, dchi):
    st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(phi), math.cos(phi)
    ph = np.exp(1j * chi)
    de1 = (dtheta * _ket(-st * cp, -st * sp, -ph * ct, 0)
           + dphi * _ket(-ct * sp, ct * cp, 0, 0)
           + dchi * _ket(0, 0, -1j * ph * st, 0))
    de2 = dphi * _ket(-cp, -sp, 0, 0)
    return np.hstack([de1, de2])


def scenario_tripod(loop, kappa=1.0):
    """
    Tripod system, basis {|0>, |1>, |2>, |e>}, with a two-dimensional dark
    subspace transported around ``loop``.

    :type loop: Loop
    """
    if kappa <= 0:
        raise HolodynException(errno.EPARAM, 'kappa=%r must be positive' % kappa)
    b0, _ = _tripod_vectors(*loop.point(0.0))
    b1, _ = _tripod_vectors(*loop.point(1.0))
    if np.linalg.norm(b1 @ dag(b1) - b0 @ dag(b0), 2) > CLOSURE_TOL:
        raise HolodynException(errno.ENOTCLOSED, 'loop %s not closed within %g' % (loop.name, CLOSURE_TOL))
    thetas = [loop.theta(s) for s in np.linspace(0.0, 1.0, 101)]
    if min(math.sin(t) for t in thetas) < 1e-3:
        raise HolodynException(errno.EPARAM, 'theta reaches a pole of the sphere: DFS dimension jump')
    excited = _ket(0, 0, 0, 1)

    def operators(s):
        bright, _ = _tripod_vectors(*loop.point(s))
        return _dark_pair(kappa, bright, excited)

    def basis(s):
        return _tripod_vectors(*loop.point(s))[1]

    def basis_derivative(s):
        return _tripod_basis_derivative(*loop.point(s), *loop.velocity(s))

    path = ReservoirPath(4, operators, lambda s: [0.0, 0.0], closed=True,
                         basis=basis, basis_derivative=basis_derivative, name='tripod:%s' % loop.name)
    first = basis(0.0)[:, :1]
    trivial = loop.name == 'constant'
    return Scenario('tripod', path, first @ dag(first), expected={'trivial': True} if trivial else {},
                    params={'loop': loop, 'kappa': kappa}, builder=scenario_tripod)


def scenario_static(gammas, cs=None, rel_tol=DEFAULT_REL_TOL):
    """
    Constant operators; the holonomy of the (trivially closed) path is the
    identity.

    :param gammas: List of square matrices.
    :param cs: Common eigenvalues, default all zero.
    """
    from holodyn.dfs import build_D
    ops = [as_matrix(g, 'gamma') for g in gammas]
    if not ops:
        raise HolodynException(errno.ELENMISMATCH, 'no Lindblad operators given')
    cs = [0.0] * len(ops) if cs is None else [complex(c) for c in cs]
    D, _ = build_D(ops, cs)
    space = nullspace(D, rel_tol)
    if space.dim == 0:
        raise HolodynException(errno.ENODFS, 'operators share no eigenspace with eigenvalues %s' % cs)
    dim = ops[0].shape[0]
    path = ReservoirPath(dim, lambda s: ops, lambda s: cs, closed=True,
                         basis=lambda s: space.basis, basis_derivative=lambda s: np.zeros_like(space.basis),
                         name='static')
    first = space.basis[:, :1]
    return Scenario('static', path, first @ dag(first), expected={'trivial': True},
                    params={'gammas': ops, 'cs': cs}, builder=scenario_static)
