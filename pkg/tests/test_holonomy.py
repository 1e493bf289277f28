import csv
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from holodyn import HolodynException
from holodyn import errno
from holodyn.dfs import block_diagonal_gauge
from holodyn.holonomy import (connection, connection_holonomy, eigenphases, frame_holonomy, gauge_invariance_check,
                              noncommutativity, path_ordered_exp, phase_distance, wilson_loop, wilson_loops,
                              write_holonomy_csv)
from holodyn.operators import dag, op_norm, random_hermitian
from holodyn.reservoir import ReservoirPath, scenario_dark_state


def _warp(s):
    return s + 0.1 * math.sin(2 * math.pi * s) / (2 * math.pi)


def _dwarp(s):
    return 1 + 0.1 * math.cos(2 * math.pi * s)


class TestPhases:

    def test_eigenphases_range(self):
        phases = eigenphases(np.diag([-1.0, 1j, -1j]))
        assert_allclose(phases, [-math.pi / 2, math.pi / 2, math.pi])

    def test_phase_distance_wraps(self):
        assert phase_distance(math.pi - 1e-9, -math.pi + 1e-9) == pytest.approx(2e-9, abs=1e-12)
        assert phase_distance(0.1, 0.1 + 2 * math.pi) == pytest.approx(0.0, abs=1e-12)


class TestWilsonLoop:

    @pytest.mark.parametrize('theta, expected', [(math.pi / 4, math.pi), (math.pi / 6, math.pi / 2)])
    def test_berry_phase(self, theta, expected):
        result = wilson_loop(scenario_dark_state(theta).path, 10000)
        assert result.dim == 1
        assert phase_distance(result.phases[0], expected) < 1e-6
        assert result.unitarity_defect < 1e-12

    def test_static_is_identity(self, static):
        result = wilson_loop(static.path, 1000)
        assert_allclose(result.U, np.eye(1), atol=1e-12)

    def test_open_path(self, dark_state):
        source = dark_state.path
        path = ReservoirPath(3, lambda s: source.eval(s)[0], lambda s: source.eval(s)[1], closed=False, name='open')
        with pytest.raises(HolodynException) as e:
            wilson_loop(path, 1000)
        assert e.value.code == errno.EOPENPATH

    def test_declared_closed_but_not(self, dark_state):
        half = dark_state.path.reparameterize(lambda s: 0.5 * s, lambda s: 0.5, name='half')
        with pytest.raises(HolodynException) as e:
            wilson_loop(half, 1000)
        assert e.value.code == errno.EOPENPATH

    def test_too_few_steps(self, dark_state):
        with pytest.raises(HolodynException) as e:
            wilson_loop(dark_state.path, 100)
        assert e.value.code == errno.EPARAM

    def test_step_convergence(self, dark_state):
        coarse = wilson_loop(dark_state.path, 500)
        fine = wilson_loop(dark_state.path, 2000)
        assert phase_distance(fine.phases[0], math.pi) <= phase_distance(coarse.phases[0], math.pi) + 1e-12
        assert phase_distance(coarse.phases[0], math.pi) < 1e-4

    def test_midpoint_converges_at_least_linearly(self, tripod_excursion):
        reference = wilson_loop(tripod_excursion.path, 4000, method='midpoint').embedded()
        errors = [op_norm(wilson_loop(tripod_excursion.path, n, method='midpoint').embedded() - reference)
                  for n in (500, 1000)]
        assert errors[0] / errors[1] >= 2.0

    def test_midpoint_agrees(self, dark_state):
        result = wilson_loop(dark_state.path, 4000, method='midpoint')
        assert phase_distance(result.phases[0], math.pi) < 1e-4

    def test_tripod_is_unitary(self, tripod_circle):
        result = wilson_loop(tripod_circle.path, 2000)
        assert result.dim == 2
        assert result.unitarity_defect < 1e-12


class TestLoopAlgebra:

    def test_reparameterization_invariance(self, tripod_excursion):
        path = tripod_excursion.path
        a = wilson_loop(path, 2000).embedded()
        b = wilson_loop(path.reparameterize(_warp, _dwarp, name='warped'), 2000).embedded()
        assert op_norm(a - b) < 1e-6

    def test_reversal_inverts(self, tripod_excursion):
        path = tripod_excursion.path
        forward = wilson_loop(path, 2000).embedded()
        backward = wilson_loop(path.reversed(), 2000).embedded()
        Pi = tripod_excursion.path.basis(0.0) @ dag(tripod_excursion.path.basis(0.0))
        assert op_norm(backward - dag(forward)) < 1e-6
        assert op_norm(backward @ forward - Pi) < 1e-6

    def test_concatenation_composes(self, tripod_circle, tripod_excursion):
        A, B = tripod_circle.path, tripod_excursion.path
        UA = wilson_loop(A, 2000).embedded()
        UB = wilson_loop(B, 2000).embedded()
        joined = wilson_loop(A.then(B), 4000).embedded()
        assert op_norm(joined - UB @ UA) < 1e-5

    def test_noncommuting_tripod_loops(self, tripod_circle, tripod_excursion):
        assert noncommutativity(tripod_circle.path, tripod_excursion.path, 2000) > 0.01

    def test_loop_commutes_with_itself(self, tripod_circle):
        assert noncommutativity(tripod_circle.path, tripod_circle.path, 1000) < 1e-12

    def test_static_loops_commute(self, static):
        assert noncommutativity(static.path, static.path, 1000) < 1e-12

    def test_different_base_points(self, dark_state, dark_state_pi6):
        with pytest.raises(HolodynException) as e:
            noncommutativity(dark_state.path, dark_state_pi6.path, 1000)
        assert e.value.code == errno.EDFSMISMATCH


class TestGaugeInvariance:

    def test_zero_gauges(self, dark_state):
        assert gauge_invariance_check(dark_state.path, None, None, 1000) <= 1e-8

    def test_random_gauge_dark_state(self, dark_state, rng):
        Q = block_diagonal_gauge(random_hermitian(rng, 3, 0.1))
        assert gauge_invariance_check(dark_state.path, None, Q, 2000) <= 1e-6

    def test_random_gauge_tripod(self, tripod_excursion, rng):
        Q1 = block_diagonal_gauge(random_hermitian(rng, 4, 0.1))
        Q2 = block_diagonal_gauge(random_hermitian(rng, 4, 0.1), profile=lambda s: math.cos(2 * math.pi * s))
        assert gauge_invariance_check(tripod_excursion.path, Q1, Q2, 2000) <= 1e-5

    def test_frame_holonomy_in_gauge_zero(self, dark_state):
        result = frame_holonomy(dark_state.path, 2000)
        assert phase_distance(result.phases[0], math.pi) < 1e-6


class TestConnection:

    def test_connection_integral(self, dark_state):
        grid = np.linspace(0.0, 1.0, 10001)
        A = connection([dark_state.path.basis(s) for s in grid], grid)
        total = sum(0.5 * (A[j] + A[j + 1])[0, 0] * (grid[j + 1] - grid[j]) for j in range(len(grid) - 1))
        assert abs(total.real) < 1e-8
        assert abs(total.imag) == pytest.approx(math.pi, abs=1e-6)

    def test_agrees_with_wilson_loop(self, tripod_excursion):
        a = connection_holonomy(tripod_excursion.path).embedded()
        b = wilson_loop(tripod_excursion.path, 2000).embedded()
        assert op_norm(a - b) < 1e-5

    def test_gauge_shift(self, tripod_excursion):
        grid = np.linspace(0.0, 1.0, 10001)
        path = tripod_excursion.path

        def omega(s):
            return np.diag([np.exp(0.5j * math.sin(2 * math.pi * s)), 1.0])

        def domega(s):
            return np.diag([1j * math.pi * math.cos(2 * math.pi * s) * np.exp(0.5j * math.sin(2 * math.pi * s)), 0.0])

        A = connection([path.basis(s) for s in grid], grid)
        shifted = connection([path.basis(s) @ omega(s) for s in grid], grid)
        for j in (0, 1234, 5000, 9999):
            s = grid[j]
            expected = dag(omega(s)) @ A[j] @ omega(s) - dag(omega(s)) @ domega(s)
            assert_allclose(shifted[j], expected, atol=1e-5)

    def test_grid_mismatch(self, dark_state):
        with pytest.raises(HolodynException) as e:
            connection([dark_state.path.basis(0.0)] * 3, [0.0, 1.0])
        assert e.value.code == errno.EGRID

    def test_coarse_grid(self, tripod_excursion):
        grid = np.linspace(0.0, 1.0, 5)
        with pytest.raises(HolodynException) as e:
            connection([tripod_excursion.path.basis(s) for s in grid], grid)
        assert e.value.code == errno.ECOARSE

    def test_path_ordering(self):
        X = np.array([[0, 1j], [1j, 0]])
        Z = np.array([[1j, 0], [0, -1j]])
        U = path_ordered_exp([X, X, Z, Z], [0.0, 1.0, 1.0 + 1e-12, 2.0])
        expected = path_ordered_exp([Z, Z], [0.0, 1.0]) @ path_ordered_exp([X, X], [0.0, 1.0])
        assert_allclose(U, expected, atol=1e-9)


class TestExport:

    def test_csv(self, dark_state, tripod_circle, tmp_path):
        results = wilson_loops([dark_state.path, tripod_circle.path], 1000, jobs=2)
        assert results[0].dim == 1 and results[1].dim == 2
        filename = tmp_path / 'holonomy.csv'
        write_holonomy_csv(results, filename, ['A', 'B'])
        with open(filename) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['loop_id', 'dim_dfs', 'phase_1', 'phase_2', 'unitarity_defect']
        assert rows[1][0] == 'A' and rows[1][3] == ''
        assert rows[2][1] == '2'

    def test_parallel_matches_serial(self, dark_state, dark_state_pi6):
        paths = [dark_state.path, dark_state_pi6.path]
        serial = wilson_loops(paths, 500)
        parallel = wilson_loops(paths, 500, jobs=2)
        for a, b in zip(serial, parallel):
            assert_allclose(a.U, b.U, atol=1e-14)
