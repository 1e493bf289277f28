import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from holodyn import HolodynException
from holodyn import errno
from holodyn.dfs import DFSFrame, block_diagonal_gauge, global_gap, transport_frame
from holodyn.expansion import (AdiabaticOrders, adiabatic_orders, block_norms, block_residual, deformed_projector,
                               effective_generator, expansion_diagnostics, first_order_discrepancy, htilde_orders,
                               l0_generator, l1_superop, l_minus1_superop, orders_along, predicted_leakage,
                               rotate_ops, rotated_generator, s1_drift, s1_operator)
from holodyn.operators import Subspace, dag, op_norm, random_density, random_hermitian, unvec, vec


@pytest.fixture(scope='module')
def dark_frames(dark_state):
    return transport_frame(dark_state.path, 400)


@pytest.fixture(scope='module')
def dark_orders(dark_state, dark_frames):
    return orders_along(dark_frames[::4], dark_state.path, 1e-2)


def _toy_orders(g):
    Pibar = np.diag([1.0, 0.0]).astype(complex)
    Gbar = np.array([[0, np.conj(g)], [g, 0]], dtype=complex)
    Dbar = np.diag([0.0, 1.0]).astype(complex)
    orders = AdiabaticOrders(0.0, 0.1, Pibar, Gbar, [np.diag([0.0, 1.0]).astype(complex)], Dbar)
    orders.Dinv = np.diag([0.0, 1.0]).astype(complex)
    return orders


class TestRotateOps:

    def test_static(self, static):
        frame = transport_frame(static.path, 100)[0]
        gammas, cs = static.path.eval(0.0)
        Gammabars, Dbar, Gbar = rotate_ops(frame, gammas, cs, 1.0)
        assert_allclose(Gammabars[0], np.diag([0.0, 1.0]), atol=1e-15)
        assert_allclose(Dbar, np.diag([0.0, 1.0]), atol=1e-15)
        assert op_norm(Gbar) < 1e-14

    def test_gap_must_be_positive(self, static):
        frame = transport_frame(static.path, 100)[0]
        with pytest.raises(HolodynException) as e:
            rotate_ops(frame, *static.path.eval(0.0), 0.0)
        assert e.value.code == errno.EPARAM

    def test_gammabar_annihilates_dfs(self, dark_orders):
        for o in dark_orders:
            for g in o.Gammabars:
                assert op_norm(g @ o.Pibar) < 1e-12

    def test_kappa_scale_invariance(self, dark_state, dark_frames):
        stronger = dark_state.rebuild(kappa=2.0)
        frames2 = transport_frame(stronger.path, 400)
        a = adiabatic_orders(dark_frames[123], dark_state.path, 1e-2, global_gap(dark_frames))
        b = adiabatic_orders(frames2[123], stronger.path, 1e-2, global_gap(frames2))
        assert_allclose(a.Dbar, b.Dbar, atol=1e-12)
        for x, y in zip(a.Gammabars, b.Gammabars):
            assert_allclose(x, y, atol=1e-12)

    def test_renormalized_gap(self, dark_orders):
        o = dark_orders[10]
        w = np.linalg.eigvalsh(0.5 * (o.Dbar + dag(o.Dbar)))
        assert w[1] >= 1 - 1e-8

    def test_gap_bound_too_large(self, dark_state, dark_frames):
        with pytest.raises(HolodynException) as e:
            adiabatic_orders(dark_frames[0], dark_state.path, 1e-2, 2.0)
        assert e.value.code == errno.EGAP


class TestS1:

    def test_two_level_toy(self):
        g = 0.3 + 0.4j
        S1 = s1_operator(_toy_orders(g))
        expected = np.array([[0, np.conj(g)], [-g, 0]])
        assert_allclose(S1, expected, atol=1e-15)

    def test_zero_coupling(self):
        assert op_norm(s1_operator(_toy_orders(0.0))) == 0.0

    def test_block_structure(self, dark_orders):
        for o in dark_orders:
            diag, _ = block_norms(o.S1, o.Pibar)
            assert diag < 1e-12

    def test_first_order_residual_is_second_order(self, dark_state, dark_frames):
        gap = global_gap(dark_frames)
        r1 = block_residual(adiabatic_orders(dark_frames[77], dark_state.path, 2e-2, gap))
        r2 = block_residual(adiabatic_orders(dark_frames[77], dark_state.path, 1e-2, gap))
        assert r1 > 0
        # at least quadratic; with Q = 0 the eta^2 part is block diagonal too
        assert r1 / r2 > 3.5

    def test_deformed_projector_first_order(self, dark_orders):
        o = dark_orders[5]
        assert op_norm(deformed_projector(o) - o.Pibar) == pytest.approx(
            o.eta * op_norm(1j * (o.S1 @ o.Pibar - o.Pibar @ dag(o.S1))))

    def test_s1_drift_is_finite(self, dark_orders):
        assert 0 < s1_drift(dark_orders[3], dark_orders[4]) < 1e3


class TestHtilde:

    def test_static(self, static):
        frame = transport_frame(static.path, 100)[0]
        o = adiabatic_orders(frame, static.path, 1e-2, 1.0)
        H0, H1, H2 = htilde_orders(o)
        assert_allclose(H0, -1j * o.Dbar)
        assert op_norm(H1) < 1e-14
        assert op_norm(H2) < 1e-14

    def test_block_diagonal(self, dark_orders):
        for o in dark_orders:
            assert block_norms(o.Htilde1, o.Pibar)[1] < 1e-12
            assert block_norms(o.Htilde2, o.Pibar)[1] < 1e-12


class TestSuperoperators:

    def test_l_minus1_annihilates_dfs_states(self, dark_orders, rng):
        o = dark_orders[17]
        L = l_minus1_superop(o)
        inside = Subspace(np.linalg.eigh(o.Pibar)[1][:, -1:])
        for _ in range(20):
            rho = random_density(rng, inside)
            assert op_norm(unvec(L @ vec(rho), 3)) < 1e-10

    def test_l_minus1_acts_outside(self, dark_orders):
        o = dark_orders[17]
        L = l_minus1_superop(o)
        # the excited level is untouched by the frame rotation
        excited = np.diag([0.0, 0.0, 1.0]).astype(complex)
        out = unvec(L @ vec(excited), 3)
        assert abs(np.trace(out)) < 1e-12
        assert op_norm(out) > 1e-3

    def test_coherences_decay_at_least_at_the_gap(self, dark_orders):
        o = dark_orders[17]
        L = l_minus1_superop(o)
        w, V = np.linalg.eigh(o.Pibar)
        inside, outside = V[:, -1:], V[:, :-1]
        basis = [vec(inside[:, [0]] @ dag(outside[:, [k]])) for k in range(outside.shape[1])]
        B = np.column_stack(basis)
        restricted = dag(B) @ L @ B
        assert np.max(np.linalg.eigvals(restricted).real) <= -1 + 1e-8

    def test_trace_preserved_by_full_generator(self, dark_orders):
        o = dark_orders[9]
        left = vec(np.eye(3))
        assert op_norm(left.conj() @ rotated_generator(o)) < 1e-10
        assert op_norm(left.conj() @ effective_generator(o)) < 1e-10

    def test_z_hermitian(self, dark_orders):
        for o in dark_orders:
            assert op_norm(o.Z - dag(o.Z)) < 1e-12

    def test_zero_coupling_gives_zero_l1(self, static):
        frame = transport_frame(static.path, 100)[0]
        o = adiabatic_orders(frame, static.path, 1e-2, 1.0)
        assert op_norm(l1_superop(o)) < 1e-14

    def test_leakage_indicator(self, dark_orders):
        assert sum(sum(x ** 2 for x in o.leakage) for o in dark_orders) > 0

    def test_leakage_sign(self, dark_orders):
        o = dark_orders[21]
        inside = np.linalg.eigh(o.Pibar)[1][:, -1:]
        rho = inside @ dag(inside)
        out = unvec(l1_superop(o) @ vec(rho), 3)
        assert np.trace(o.Pibar @ out @ o.Pibar).real <= 1e-15


class TestL0:

    def test_no_dynamical_phase(self, dark_frames):
        total = sum(op_norm(l0_generator(f)) for f in dark_frames) / (len(dark_frames) - 1)
        assert total <= 1e-10

    def test_gauge_term(self, dark_state, rng):
        H = random_hermitian(rng, 3)
        frames = transport_frame(dark_state.path, 200, gauge=block_diagonal_gauge(H))
        f = frames[60]
        Pibar = f.Pibar
        assert_allclose(l0_generator(f), Pibar @ dag(f.O) @ f.Q @ f.O @ Pibar, atol=1e-12)

    def test_static_gauge_without_dfs_block(self, static):
        Q = lambda s, Pi: np.diag([0.0, 1.0]).astype(complex)
        frames = transport_frame(static.path, 100, gauge=Q)
        assert op_norm(l0_generator(frames[30])) < 1e-14


class TestFirstOrder:

    def test_predicted_leakage_scales_with_eta(self, dark_state, dark_frames):
        rho0 = dark_state.rho0
        a = predicted_leakage(dark_frames, dark_state.path, 1e-2, rho0)
        b = predicted_leakage(dark_frames, dark_state.path, 1e-3, rho0)
        assert a == pytest.approx(10 * b)
        # 2 pi^2 sin^2(2 theta) eta at theta = pi/4
        assert a == pytest.approx(2 * np.pi ** 2 * 1e-2, rel=1e-2)

    @pytest.mark.slow
    def test_discrepancy_is_second_order(self, dark_state):
        d1 = first_order_discrepancy(dark_state.path, 1e-2, dark_state.rho0)
        d2 = first_order_discrepancy(dark_state.path, 5e-3, dark_state.rho0)
        assert d1 / d2 >= 3.0

    def test_frame_type(self, dark_frames):
        assert isinstance(dark_frames[0], DFSFrame)


class TestDiagnostics:

    def test_dark_state(self, dark_state, dark_frames, caplog):
        with caplog.at_level(logging.DEBUG, logger='holodyn.expansion'):
            diagnostics = expansion_diagnostics(dark_frames, dark_state.path, 1e-2)
        assert diagnostics['leakage_indicator'] > 0
        assert 0 <= diagnostics['max_s1_drift'] < np.inf
        assert 'leakage indicator' in caplog.text

    def test_static_reservoir_has_nothing_to_leak(self, static):
        diagnostics = expansion_diagnostics(transport_frame(static.path, 100), static.path, 1e-2)
        assert diagnostics['leakage_indicator'] < 1e-20
        assert diagnostics['max_s1_drift'] < 1e-12
