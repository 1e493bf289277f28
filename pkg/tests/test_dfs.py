import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from holodyn import HolodynException
from holodyn import errno
from holodyn.dfs import (block_diagonal_gauge, build_D, dfs_propagators, g_off, generator, global_gap,
                         instantaneous_dfs, projector_derivative, transport_frame)
from holodyn.operators import commutator, dag, op_norm, random_hermitian
from holodyn.reservoir import ReservoirPath


def _rotating_qubit(omega=1.0, closed=True):
    """Single operator sqrt(1)|psi_perp><psi_perp| with a rotating dark state, no analytic basis."""

    def operators(s):
        a = math.pi * s * omega
        bright = np.array([-math.sin(a), math.cos(a)])
        return [np.outer(bright, bright).astype(complex)]

    return ReservoirPath(2, operators, lambda s: [0.0], closed=closed, name='qubit')


class TestInstantaneousDFS:

    def test_dark_state_dimension_and_gap(self, dark_state):
        space, gap = instantaneous_dfs(dark_state.path, 0.3)
        assert space.dim == 1
        assert gap == pytest.approx(1.0)

    def test_D_annihilates_dfs(self, dark_state):
        for s in np.linspace(0.0, 1.0, 11):
            D, _ = build_D(*dark_state.path.eval(s))
            space, _ = instantaneous_dfs(dark_state.path, s)
            assert op_norm(D @ space.projector) < 1e-10

    def test_whole_space_has_infinite_gap(self):
        path = ReservoirPath(2, lambda s: [np.zeros((2, 2))], lambda s: [0.0], closed=True)
        space, gap = instantaneous_dfs(path, 0.0)
        assert space.dim == 2
        assert math.isinf(gap)

    def test_build_D_rejects_mixed_dimensions(self):
        with pytest.raises(HolodynException) as e:
            build_D([np.eye(2), np.eye(3)], [0.0, 0.0])
        assert e.value.code == errno.EDIMMISMATCH

    def test_no_dfs(self):
        path = ReservoirPath(2, lambda s: [np.eye(2)], lambda s: [0.0], closed=True)
        with pytest.raises(HolodynException) as e:
            instantaneous_dfs(path, 0.0)
        assert e.value.code == errno.ENODFS

    def test_gap_floor(self, dark_state):
        with pytest.raises(HolodynException) as e:
            instantaneous_dfs(dark_state.path, 0.0, gap_floor=2.0)
        assert e.value.code == errno.EGAP

    def test_loose_tolerance_admits_a_decaying_direction(self):
        path = ReservoirPath(3, lambda s: [np.diag([0.0, 0.1, 1.0]).astype(complex)], lambda s: [0.0], closed=True)
        with pytest.raises(HolodynException) as e:
            instantaneous_dfs(path, 0.0, rel_tol=0.5)
        assert e.value.code == errno.EINCONSISTENT


class TestProjectorDerivative:

    def test_analytic_matches_finite_difference(self, dark_state):
        path = dark_state.path
        h = 1e-6
        fd = (instantaneous_dfs(path, 0.4 + h)[0].projector - instantaneous_dfs(path, 0.4 - h)[0].projector) / (2 * h)
        assert_allclose(projector_derivative(path, 0.4), fd, atol=1e-6)

    def test_finite_difference_path(self):
        path = _rotating_qubit()
        a = math.pi * 0.25
        expected = math.pi * np.array([[-math.sin(2 * a), math.cos(2 * a)], [math.cos(2 * a), math.sin(2 * a)]])
        assert_allclose(projector_derivative(path, 0.25), expected, atol=1e-6)

    def test_generator_is_hermitian_and_off_diagonal(self, dark_state):
        space, _, G, Q = generator(dark_state.path, 0.2)
        Pi = space.projector
        assert op_norm(G - dag(G)) < 1e-14
        assert op_norm(Pi @ G @ Pi) < 1e-12
        assert op_norm(Q) == 0.0


class TestTransportFrame:

    def test_rigidity(self, dark_state):
        frames = transport_frame(dark_state.path, 1000)
        assert len(frames) == 1001
        assert max(f.rigidity for f in frames) < 1e-6
        Pi0 = frames[0].Pi.projector
        for f in frames[::100]:
            assert op_norm(f.Pibar - Pi0) < 1e-6

    def test_frame_is_unitary(self, tripod_excursion):
        frames = transport_frame(tripod_excursion.path, 500)
        O = frames[-1].O
        assert op_norm(dag(O) @ O - np.eye(4)) < 1e-12

    def test_midpoint_is_coarser_than_magnus(self, dark_state):
        magnus = transport_frame(dark_state.path, 200, rigidity_tol=None)
        midpoint = transport_frame(dark_state.path, 200, method='midpoint', rigidity_tol=None)
        assert max(f.rigidity for f in magnus) < max(f.rigidity for f in midpoint)

    def test_rigidity_guard(self, dark_state):
        with pytest.raises(HolodynException) as e:
            transport_frame(dark_state.path, 100, method='midpoint', rigidity_tol=1e-10)
        assert e.value.code == errno.ERIGIDITY

    def test_too_few_steps(self, dark_state):
        with pytest.raises(HolodynException) as e:
            transport_frame(dark_state.path, 50)
        assert e.value.code == errno.EPARAM

    def test_dimension_jump(self):
        def operators(s):
            # kernel is 2-dim for s < 1/2 and 1-dim after
            return [np.diag([0.0, 0.0, 1.0]).astype(complex) if s < 0.5 else np.diag([0.0, 1.0, 1.0]).astype(complex)]

        path = ReservoirPath(3, operators, lambda s: [0.0], closed=False, name='jump')
        with pytest.raises(HolodynException) as e:
            transport_frame(path, 100)
        assert e.value.code == errno.EDIMJUMP

    def test_static_frame_is_identity(self, static):
        frames = transport_frame(static.path, 100)
        assert op_norm(frames[-1].O - np.eye(2)) < 1e-14
        assert op_norm(g_off(frames[50])) < 1e-14

    def test_global_gap(self, dark_state):
        frames = transport_frame(dark_state.path, 100)
        assert global_gap(frames) == pytest.approx(1.0)


class TestGauge:

    def test_block_diagonal_gauge_propagator(self, dark_state, rng):
        Q = block_diagonal_gauge(random_hermitian(rng, 3))
        frames = transport_frame(dark_state.path, 400, gauge=Q)
        W = dfs_propagators(frames)
        assert len(W) == 401
        assert op_norm(dag(W[-1]) @ W[-1] - np.eye(1)) < 1e-12

    def test_zero_gauge_propagator_is_identity(self, dark_state):
        W = dfs_propagators(transport_frame(dark_state.path, 100))
        assert op_norm(W[-1] - np.eye(1)) < 1e-14

    def test_gauge_must_be_block_diagonal(self, dark_state, rng):
        H = random_hermitian(rng, 3)
        with pytest.raises(HolodynException) as e:
            transport_frame(dark_state.path, 100, gauge=lambda s, Pi: H)
        assert e.value.code == errno.ENOTHERMITIAN

    def test_gauge_commutes_with_projector(self, tripod_circle, rng):
        Q = block_diagonal_gauge(random_hermitian(rng, 4), profile=lambda s: math.sin(2 * math.pi * s))
        space, _ = instantaneous_dfs(tripod_circle.path, 0.3)
        Pi = space.projector
        assert op_norm(commutator(Q(0.3, Pi), Pi)) < 1e-12

    def test_frames_differ_by_a_block_diagonal_unitary(self, tripod_excursion, rng):
        Q1 = block_diagonal_gauge(random_hermitian(rng, 4, 0.1))
        Q2 = block_diagonal_gauge(random_hermitian(rng, 4, 0.1), profile=lambda s: math.cos(2 * math.pi * s))
        first = transport_frame(tripod_excursion.path, 1000, gauge=Q1)
        second = transport_frame(tripod_excursion.path, 1000, gauge=Q2)
        Pi0 = first[0].Pi.projector
        for a, b in zip(first[::100], second[::100]):
            Omega = dag(a.O) @ b.O
            assert op_norm(dag(Omega) @ Omega - np.eye(4)) < 1e-10
            assert op_norm(commutator(Pi0, Omega)) < 1e-6


class TestStepConvergence:

    def test_doubling_steps_shrinks_rigidity_defect(self, dark_state):
        coarse = transport_frame(dark_state.path, 200, method='midpoint', rigidity_tol=None)
        fine = transport_frame(dark_state.path, 400, method='midpoint', rigidity_tol=None)
        ratio = max(f.rigidity for f in coarse) / max(f.rigidity for f in fine)
        assert ratio >= 3.0
