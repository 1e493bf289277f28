"""
Named experiments over gamma*T sweeps, log-log fits and run reports.
"""
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from holodyn import HolodynException, __version__
from holodyn import errno
from holodyn import config as configuration
from holodyn.dfs import block_diagonal_gauge, build_D, global_gap, transport_frame
from holodyn.expansion import (adiabatic_orders, block_norms, expansion_diagnostics, l_minus1_superop,
                               predicted_leakage)
from holodyn.holonomy import (connection_holonomy, gauge_invariance_check, noncommutativity, phase_distance,
                              wilson_loop, write_holonomy_csv)
from holodyn.lindblad import MAX_STORED, dfs_overlap, integrate, write_trajectory_csv
from holodyn.operators import Subspace, dag, hermitian_defect, op_norm, random_density, random_hermitian, unvec, vec
from holodyn.reservoir import scenario_dark_state, scenario_tripod, theta_excursion

logger = logging.getLogger(__name__)

MIN_DECADES = 1.5
MIN_POINTS = 3


@dataclass
class Criterion:
    """One pass/fail judgement against a numeric threshold."""

    name: str
    value: float
    threshold: float
    comparison: str
    passed: bool

    @classmethod
    def at_most(cls, name, value, threshold):
        return cls(name, float(value), float(threshold), '<=', bool(value <= threshold))

    @classmethod
    def at_least(cls, name, value, threshold):
        return cls(name, float(value), float(threshold), '>=', bool(value >= threshold))

    @classmethod
    def within(cls, name, value, target, tol):
        return cls(name, float(value), float(tol), '|x - %g| <=' % target, bool(abs(value - target) <= tol))


@dataclass
class ExperimentReport:
    name: str
    scenario: str
    sweep: list = field(default_factory=list)
    etas: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    criteria: list = field(default_factory=list)
    wall_clock: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.criteria)

    def failed(self):
        return [c for c in self.criteria if not c.passed]

    def to_dict(self):
        d = asdict(self)
        d['passed'] = self.passed
        return d


@dataclass
class RunSettings:
    transport_steps: int = 1000
    wilson_steps: int = 10000
    integrate_per_gammaT: float = 10.0
    min_integrate: int = 1000
    integrate: Optional[int] = None
    rel_tol: float = 1e-9
    gap_floor: float = 0.0
    slope_tol: float = 0.15
    leakage_slope_tol: float = 0.2
    jobs: int = 1
    seed: int = 0

    def __post_init__(self):
        # the overlap needs transport frames on a uniform grid of stored states
        if self.integrate and self.integrate % math.ceil(self.integrate / MAX_STORED):
            raise HolodynException(errno.EPARAM, 'steps.integrate=%d is not a multiple of its storage stride %d'
                                   % (self.integrate, math.ceil(self.integrate / MAX_STORED)))

    @classmethod
    def from_config(cls, config, jobs=1):
        steps, tol = config['steps'], config['tolerances']
        return cls(steps['transport'], steps['wilson'], steps['integrate_per_gammaT'], steps['min_integrate'],
                   steps.get('integrate'), tol['rel_tol'], tol['gap_floor'], tol['slope'], tol['leakage_slope'],
                   jobs, config['seed'])


@dataclass
class Run:
    """One full integration of a scenario at a given gamma*T."""

    gammaT: float
    eta: float
    T: float
    steps: int
    trajectory: object
    overlap: object
    frames: list
    gap: float
    wall_clock: float


def fit_loglog(x, y):
    """
    Ordinary least squares slope of ``log y`` against ``log x``.

    :return: (slope, stderr)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise HolodynException(errno.EPARAM, 'log-log fit needs at least 2 positive points')
    if len(x) == 2:
        slope = float(np.diff(np.log(y))[0] / np.diff(np.log(x))[0])
        return slope, 0.0
    fit = stats.linregress(np.log(x), np.log(y))
    return float(fit.slope), float(fit.stderr)


def check_sweep(gammaT_list):
    g = sorted(gammaT_list)
    if len(g) < MIN_POINTS or math.log10(g[-1] / g[0]) < MIN_DECADES:
        raise HolodynException(errno.EPARAM, 'gamma*T sweep %s needs >= %d points over >= %.1f decades'
                               % (list(gammaT_list), MIN_POINTS, MIN_DECADES))


def integration_steps(rate, T, settings):
    """Fixed step count if configured, else a multiple of 1000 with ``rate * T / steps <= 1 / per_gammaT``."""
    if settings.integrate:
        return settings.integrate
    steps = max(settings.min_integrate, math.ceil(round(settings.integrate_per_gammaT * rate * T, 6)))
    return 1000 * math.ceil(steps / 1000)


def simulate(scenario, gammaT, settings, T=None):
    """
    Integrate one traversal of the loop lasting ``T = gammaT / gamma``.

    :param T: Override the duration (used when comparing scenarios at fixed T).
    :rtype: Run
    """
    started = time.perf_counter()
    path = scenario.path
    frames = transport_frame(path, settings.transport_steps, rel_tol=settings.rel_tol, gap_floor=settings.gap_floor)
    gap = global_gap(frames)
    gap = gap if math.isfinite(gap) else 1.0
    T = gammaT / gap if T is None else T
    steps = integration_steps(path.rate_scale(), T, settings)
    traj = integrate(path, scenario.rho0, T, steps, rel_tol=settings.rel_tol).check()
    stored = len(traj.grid) - 1
    if stored != settings.transport_steps:
        frames = transport_frame(path, stored, rel_tol=settings.rel_tol)
    overlap = dfs_overlap(traj, frames, scenario.rho0)
    wall = time.perf_counter() - started
    logger.info('%s gammaT=%g: %d steps, leakage %.3e, fidelity %.9f (%.1fs)',
                scenario.name, gap * T, steps, overlap.leakage, overlap.fidelity[-1], wall)
    return Run(gap * T, 1.0 / (gap * T), T, steps, traj, overlap, frames, gap, wall)


def sweep(scenario, gammaT_list, settings):
    """Runs in the order of ``gammaT_list`` whatever the completion order."""
    if settings.jobs <= 1:
        return [simulate(scenario, g, settings) for g in gammaT_list]
    with ThreadPoolExecutor(max_workers=settings.jobs) as pool:
        return list(pool.map(lambda g: simulate(scenario, g, settings), gammaT_list))


def _trivial(scenario):
    return bool(scenario.expected.get('trivial'))


def exp_adiabatic_limit(scenario, gammaT_list, settings=None, runs=None):
    """
    Distance of the final DFS block from the holonomy prediction across the
    sweep, with the log-log slope of ``1 - fidelity`` against ``gamma*T``.
    """
    settings = settings or RunSettings()
    check_sweep(gammaT_list)
    runs = runs or sweep(scenario, gammaT_list, settings)
    infid = [max(0.0, 1.0 - r.overlap.fidelity[-1]) for r in runs]
    block_infid = [max(0.0, 1.0 - r.overlap.block_fidelity[-1]) for r in runs]
    report = ExperimentReport('adiabatic_limit', scenario.name, [r.gammaT for r in runs], [r.eta for r in runs],
                              {'infidelity': infid, 'block_infidelity': block_infid,
                               'leakage': [r.overlap.leakage for r in runs]},
                              wall_clock=[r.wall_clock for r in runs])
    if _trivial(scenario):
        report.criteria.append(Criterion.at_most('max infidelity', max(infid), 1e-9))
        return report
    slope, err = fit_loglog(report.sweep, infid)
    report.fits['infidelity_vs_gammaT'] = {'slope': slope, 'stderr': err}
    report.fits['infidelity_vs_eta'] = {'slope': -slope, 'stderr': err}
    report.criteria.append(Criterion.within('slope of log(1-F) vs log(gammaT)', slope, -1.0, settings.slope_tol))
    if scenario.path.basis is not None and scenario.path.basis(0.0).shape[1] > 1:
        report.criteria.append(Criterion.at_least('DFS block fidelity at largest gammaT',
                                                  1.0 - block_infid[-1], 0.999))
    return report


def exp_leakage_scaling(scenario, gammaT_list, settings=None, runs=None):
    """
    Population leaving the DFS over one loop, its slope against ``eta``, the
    first-order prediction and the effect of doubling the dissipation rate.
    """
    settings = settings or RunSettings()
    check_sweep(gammaT_list)
    runs = runs or sweep(scenario, gammaT_list, settings)
    leakage = [max(0.0, r.overlap.leakage) for r in runs]
    report = ExperimentReport('leakage_scaling', scenario.name, [r.gammaT for r in runs], [r.eta for r in runs],
                              {'leakage': leakage}, wall_clock=[r.wall_clock for r in runs])
    report.series['expansion'] = expansion_diagnostics(runs[-1].frames, scenario.path, runs[-1].eta)
    if _trivial(scenario):
        report.criteria.append(Criterion.at_most('max leakage', max(leakage), 1e-9))
        return report
    slope, err = fit_loglog(report.etas, leakage)
    report.fits['leakage_vs_eta'] = {'slope': slope, 'stderr': err}
    report.criteria.append(Criterion.within('slope of log(leakage) vs log(eta)', slope, 1.0, settings.leakage_slope_tol))

    predicted = [predicted_leakage(r.frames, scenario.path, r.eta, scenario.rho0) for r in runs]
    report.series['predicted_leakage'] = predicted
    ratio = leakage[-1] / predicted[-1] if predicted[-1] > 0 else math.inf
    report.series['leakage_ratio'] = ratio
    report.criteria.append(Criterion.at_most('|log2(measured / first-order leakage)| at smallest eta',
                                             abs(math.log2(ratio)) if 0 < ratio < math.inf else math.inf, 1.0))

    if 'kappa' in scenario.params:
        base = runs[len(runs) // 2]
        stronger = scenario.rebuild(kappa=2 * scenario.params['kappa'])
        doubled = simulate(stronger, None, settings, T=base.T)
        halving = doubled.overlap.leakage / base.overlap.leakage
        report.series['kappa_doubling'] = {'T': base.T, 'leakage': base.overlap.leakage,
                                           'leakage_doubled': doubled.overlap.leakage}
        report.criteria.append(Criterion.within('leakage ratio after doubling kappa', halving, 0.5, 0.15))
    return report


def exp_holonomy(scenario, settings=None, partner=None):
    """
    Wilson loop of the scenario, checked against its analytic value, the
    connection route and a frame holonomy in a random gauge drawn from
    ``settings.seed``, plus the commutator with ``partner`` when given.

    :return: (ExperimentReport, list of HolonomyResult)
    """
    settings = settings or RunSettings()
    started = time.perf_counter()
    result = wilson_loop(scenario.path, settings.wilson_steps)
    results = [result]
    report = ExperimentReport('holonomy', scenario.name, series={'phases': result.phases.tolist()})
    report.criteria.append(Criterion.at_most('unitarity defect', result.unitarity_defect, 1e-8))
    if _trivial(scenario):
        report.criteria.append(Criterion.at_most('||U - 1||', op_norm(result.U - np.eye(result.dim)), 1e-8))
    if 'berry_phase' in scenario.expected:
        expected = scenario.expected['berry_phase']
        report.series['berry_phase'] = expected
        report.criteria.append(Criterion.at_most('|phase - analytic Berry phase|',
                                                 phase_distance(result.phases[0], expected), 1e-6))
    if scenario.path.basis is not None and not _trivial(scenario):
        reference = connection_holonomy(scenario.path)
        distance = op_norm(reference.embedded() - result.embedded())
        report.series['connection_distance'] = distance
        report.criteria.append(Criterion.at_most('||U_wilson - U_connection||', distance, 1e-6))
    rng = np.random.default_rng(settings.seed)
    gauge = block_diagonal_gauge(random_hermitian(rng, scenario.path.dim, 0.1))
    discrepancy = gauge_invariance_check(scenario.path, None, gauge, max(settings.transport_steps, 1000))
    report.series['gauge_discrepancy'] = {'seed': settings.seed, 'value': discrepancy}
    report.criteria.append(Criterion.at_most('gauge discrepancy, random gauge', discrepancy, 1e-5))
    if partner is not None:
        other = wilson_loop(partner.path, settings.wilson_steps)
        results.append(other)
        value = noncommutativity(scenario.path, partner.path, settings.wilson_steps)
        report.series['noncommutativity'] = value
        report.series['partner_phases'] = other.phases.tolist()
        report.criteria.append(Criterion.at_most('partner unitarity defect', other.unitarity_defect, 1e-8))
        report.criteria.append(Criterion.at_least('||[U_A, U_B]||', value, 0.01))
    report.wall_clock.append(time.perf_counter() - started)
    return report, results


def verify(seed=0, settings=None):
    """
    Structural invariant suite on the dark-state and tripod scenarios.

    :rtype: ExperimentReport
    """
    settings = settings or RunSettings()
    rng = np.random.default_rng(seed)
    started = time.perf_counter()
    report = ExperimentReport('verify', 'dark_state+tripod')
    checks = {}

    def worst(name, value):
        checks[name] = max(checks.get(name, 0.0), float(value))

    scenarios = [scenario_dark_state(math.pi / 4), scenario_tripod(theta_excursion(math.pi / 4))]
    for scenario in scenarios:
        path = scenario.path
        frames = transport_frame(path, settings.transport_steps, rel_tol=settings.rel_tol)
        gap = global_gap(frames)
        worst('frame rigidity', max(f.rigidity for f in frames))
        for frame in frames[::max(1, len(frames) // 100)]:
            orders = adiabatic_orders(frame, path, 1e-2, gap)
            gammas, cs = path.eval(frame.s)
            D, _ = build_D(gammas, cs)
            worst('||D Pi||', op_norm(D @ frame.Pi.projector))
            worst('||Gammabar Pibar||', max(op_norm(g @ orders.Pibar) for g in orders.Gammabars))
            worst('H1 off-diagonal block', block_norms(orders.Htilde1, orders.Pibar)[1])
            worst('H2 off-diagonal block', block_norms(orders.Htilde2, orders.Pibar)[1])
            worst('Z Hermitian defect', hermitian_defect(orders.Z))
        orders = adiabatic_orders(frames[len(frames) // 2], path, 1e-2, gap)
        L = l_minus1_superop(orders)
        inside = Subspace(dag(frames[len(frames) // 2].O) @ frames[len(frames) // 2].Pi.basis)
        dim = path.dim
        for _ in range(20):
            rho = random_density(rng, inside)
            worst('||L_-1 rho_DF||', op_norm(unvec(L @ vec(rho), dim)))
        traj = integrate(path, scenario.rho0, 100.0 / gap, 2000, rel_tol=settings.rel_tol)
        worst('trace defect', float(np.max(np.abs(traj.trace - 1))))
        worst('negative eigenvalue', max(0.0, -float(np.min(traj.min_eig))))
        Q = block_diagonal_gauge(random_hermitian(rng, dim, 0.1))
        worst('gauge discrepancy', gauge_invariance_check(path, None, Q, settings.transport_steps))

    limits = {'frame rigidity': 1e-6, '||D Pi||': 1e-10, '||Gammabar Pibar||': 1e-10,
              'H1 off-diagonal block': 1e-12, 'H2 off-diagonal block': 1e-12, 'Z Hermitian defect': 1e-12,
              '||L_-1 rho_DF||': 1e-10, 'trace defect': 1e-9, 'negative eigenvalue': 1e-8,
              'gauge discrepancy': 1e-6}
    for name, limit in limits.items():
        report.criteria.append(Criterion.at_most(name, checks[name], limit))
    report.wall_clock.append(time.perf_counter() - started)
    return report


def _write_runs(out, name, runs):
    for r in runs:
        filename = os.path.join(out, '%s_trajectory_gT%g.csv' % (name, r.gammaT))
        write_trajectory_csv(r.trajectory, filename, r.overlap)


def run_config(config_file, out=None, jobs=1, seed=None):
    """
    Execute every experiment a configuration names and write its CSV series
    and ``summary.json`` to ``out``.

    :return: Exit status, 0 when every criterion passed.
    """
    try:
        config = configuration.load_config(config_file)
        if seed is not None:
            config['seed'] = seed
        settings = RunSettings.from_config(config, jobs)
        scenario = configuration.build_scenario(config)
        partner = configuration.build_partner(config)
        out = configuration.output_dir(out)
        os.makedirs(out, exist_ok=True)

        reports = []
        runs = None
        for experiment in config['experiments']:
            if experiment == 'holonomy':
                report, results = exp_holonomy(scenario, settings, partner)
                write_holonomy_csv(results, os.path.join(out, '%s_holonomy.csv' % config['name']))
            else:
                if runs is None:
                    check_sweep(config['gammaT'])
                    runs = sweep(scenario, config['gammaT'], settings)
                    _write_runs(out, config['name'], runs)
                fn = exp_adiabatic_limit if experiment == 'adiabatic_limit' else exp_leakage_scaling
                report = fn(scenario, config['gammaT'], settings, runs)
            for c in report.failed():
                logger.warning('%s: %s = %.6g, required %s %g', report.name, c.name, c.value, c.comparison, c.threshold)
            reports.append(report)
    except HolodynException as e:
        logger.error('%s', e)
        return e.exit_code

    summary = {'name': config['name'], 'version': __version__, 'config': _jsonable(config),
               'reports': [r.to_dict() for r in reports], 'passed': all(r.passed for r in reports)}
    with open(os.path.join(out, 'summary.json'), 'w') as f:
        json.dump(summary, f, indent=2, sort_keys=True, default=_jsonable)
    logger.info('%s: %s, results in %s', config['name'], 'passed' if summary['passed'] else 'FAILED', out)
    return errno.EXIT_OK if summary['passed'] else errno.EXIT_CRITERION


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj
