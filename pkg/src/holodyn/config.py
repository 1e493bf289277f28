"""
Run configuration: JSON documents validated against :data:`CONFIG_SCHEMA`.

Bundled configurations live in ``holodyn/configs`` and can be named without
their directory or extension (``holodyn run darkstate``).
"""
import copy
import json
import logging
import math
import os

import numpy as np
from jsonschema import Draft7Validator

from holodyn import HolodynException
from holodyn import errno
from holodyn import reservoir

logger = logging.getLogger(__name__)

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs')
OUT_ENV = 'HOLODYN_OUT'
DEFAULT_OUT = 'holodyn_out'

EXPERIMENTS = ('holonomy', 'adiabatic_limit', 'leakage_scaling')

_number = {'type': 'number'}
_complex = {'type': 'array', 'items': _number, 'minItems': 2, 'maxItems': 2}

CONFIG_SCHEMA = {
    '$schema': 'http://json-schema.org/draft-07/schema#',
    'type': 'object',
    'required': ['scenario'],
    'additionalProperties': False,
    'properties': {
        'name': {'type': 'string', 'minLength': 1},
        'scenario': {'enum': ['dark_state', 'tripod', 'static']},
        'params': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'theta': _number,
                'kappa': {'type': 'number', 'exclusiveMinimum': 0},
                'loop': {'type': 'array', 'minItems': 4,
                         'items': {'type': 'array', 'items': _number, 'minItems': 2, 'maxItems': 3}},
                'loop_kind': {'enum': ['phi_circle', 'theta_excursion', 'constant']},
                'loop_theta': _number,
                'loop_amplitude': _number,
                'gammas': {'type': 'array', 'minItems': 1,
                           'items': {'type': 'array', 'minItems': 1,
                                     'items': {'type': 'array', 'minItems': 1, 'items': _complex}}},
                'cs': {'type': 'array', 'items': _complex},
            },
        },
        'gammaT': {'type': 'array', 'minItems': 1, 'items': {'type': 'number', 'minimum': 1}},
        'steps': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'transport': {'type': 'integer', 'minimum': 100},
                'wilson': {'type': 'integer', 'minimum': 500},
                'integrate_per_gammaT': {'type': 'number', 'exclusiveMinimum': 0},
                'min_integrate': {'type': 'integer', 'minimum': 1},
                'integrate': {'type': 'integer', 'minimum': 1},
            },
        },
        'tolerances': {
            'type': 'object',
            'additionalProperties': False,
            'properties': {
                'rel_tol': {'type': 'number', 'exclusiveMinimum': 0, 'exclusiveMaximum': 1},
                'gap_floor': {'type': 'number', 'minimum': 0},
                'slope': {'type': 'number', 'exclusiveMinimum': 0},
                'leakage_slope': {'type': 'number', 'exclusiveMinimum': 0},
            },
        },
        'experiments': {'type': 'array', 'uniqueItems': True, 'items': {'enum': list(EXPERIMENTS)}},
        'seed': {'type': 'integer', 'minimum': 0},
    },
}

DEFAULTS = {
    'name': 'run',
    'params': {'theta': math.pi / 4, 'kappa': 1.0, 'loop_kind': 'phi_circle',
               'loop_theta': math.pi / 4, 'loop_amplitude': 0.3},
    'gammaT': [100, 1000, 10000],
    'steps': {'transport': 1000, 'wilson': 10000, 'integrate_per_gammaT': 10, 'min_integrate': 1000},
    'tolerances': {'rel_tol': 1e-9, 'gap_floor': 0.0, 'slope': 0.15, 'leakage_slope': 0.2},
    'experiments': list(EXPERIMENTS),
    'seed': 0,
}


def resolve(name):
    """Path of a config file, looking in the bundled configs for bare names."""
    if os.path.exists(name):
        return name
    for candidate in (name, name + '.json'):
        bundled = os.path.join(CONFIG_DIR, candidate)
        if os.path.exists(bundled):
            return bundled
    raise HolodynException(errno.ECONFIGIO, 'no such config: %s' % name)


def bundled():
    """Names of the bundled configurations."""
    return sorted(f[:-5] for f in os.listdir(CONFIG_DIR) if f.endswith('.json'))


def validate(document):
    """
    :raises HolodynException: ESCHEMA listing every violation.
    """
    errors = sorted(Draft7Validator(CONFIG_SCHEMA).iter_errors(document), key=lambda e: list(e.path))
    if errors:
        details = ['%s: %s' % ('/'.join(str(p) for p in e.path) or '<root>', e.message) for e in errors]
        raise HolodynException(errno.ESCHEMA, *details)
    return document


def with_defaults(document):
    config = copy.deepcopy(DEFAULTS)
    for key, value in document.items():
        if isinstance(value, dict) and isinstance(config.get(key), dict):
            config[key].update(value)
        else:
            config[key] = value
    return config


def load_config(name):
    """
    Read, validate and complete a configuration.

    :param name: File path or bundled config name.
    :return: dict with every default filled in.
    """
    filename = resolve(name)
    try:
        with open(filename) as f:
            document = json.load(f)
    except OSError as e:
        raise HolodynException(errno.ECONFIGIO, '%s: %s' % (filename, e.strerror))
    except ValueError as e:
        raise HolodynException(errno.ECONFIGIO, '%s: invalid JSON: %s' % (filename, e))
    validate(document)
    config = with_defaults(document)
    logger.debug('loaded %s from %s', config['name'], filename)
    return config


def output_dir(out=None):
    return out or os.environ.get(OUT_ENV) or DEFAULT_OUT


def _complex_matrix(rows, where):
    widths = {len(row) for row in rows}
    if widths != {len(rows)}:
        raise HolodynException(errno.ESCHEMA, '%s: %d rows of lengths %s, expected a square matrix'
                               % (where, len(rows), sorted(widths)))
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def build_loop(params, kind=None):
    kind = kind or params['loop_kind']
    if params.get('loop') is not None and kind == params['loop_kind']:
        return reservoir.loop_from_points(params['loop'])
    theta0 = params['loop_theta']
    if kind == 'phi_circle':
        return reservoir.phi_circle(theta0)
    if kind == 'theta_excursion':
        return reservoir.theta_excursion(theta0, params['loop_amplitude'])
    return reservoir.constant_loop(theta0)


def build_scenario(config):
    """Scenario named by ``config['scenario']`` with ``config['params']``."""
    params = config['params']
    kind = config['scenario']
    if kind == 'dark_state':
        return reservoir.scenario_dark_state(params['theta'], params['kappa'])
    if kind == 'tripod':
        return reservoir.scenario_tripod(build_loop(params), params['kappa'])
    if 'gammas' not in params:
        raise HolodynException(errno.ESCHEMA, 'params/gammas: required for the static scenario')
    gammas = [_complex_matrix(g, 'params/gammas/%d' % k) for k, g in enumerate(params['gammas'])]
    dims = [g.shape[0] for g in gammas]
    if len(set(dims)) > 1:
        raise HolodynException(errno.ESCHEMA, 'params/gammas: operators of different dimensions %s' % dims)
    cs = [complex(re, im) for re, im in params['cs']] if 'cs' in params else None
    if cs is not None and len(cs) != len(gammas):
        raise HolodynException(errno.ESCHEMA, 'params/cs: %d eigenvalues for %d operators' % (len(cs), len(gammas)))
    return reservoir.scenario_static(gammas, cs, config['tolerances']['rel_tol'])


def build_partner(config):
    """
    The other built-in tripod loop at the same base point, for the
    non-commutativity check. None for other scenarios.
    """
    if config['scenario'] != 'tripod' or config['params'].get('loop') is not None:
        return None
    params = config['params']
    other = 'theta_excursion' if params['loop_kind'] != 'theta_excursion' else 'phi_circle'
    return reservoir.scenario_tripod(build_loop(params, other), params['kappa'])
