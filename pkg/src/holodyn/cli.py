"""
``holodyn`` command line.

    holodyn run <config> [--out DIR] [--jobs N] [--seed S]
    holodyn holonomy <config> [--steps N] [--out DIR]
    holodyn verify [--seed S]
"""
import argparse
import logging
import os
import sys

from holodyn import HolodynException, __version__
from holodyn import errno
from holodyn import config as configuration
from holodyn import harness
from holodyn.holonomy import write_holonomy_csv

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s [%(levelname)s] %(name)s: %(message)s'


def _print_report(report):
    for c in report.criteria:
        print('%-4s %-55s %12.6g %s %g' % ('ok' if c.passed else 'FAIL', c.name, c.value, c.comparison, c.threshold))


def cmd_run(args):
    return harness.run_config(args.config, out=args.out, jobs=args.jobs, seed=args.seed)


def cmd_holonomy(args):
    try:
        config = configuration.load_config(args.config)
        settings = harness.RunSettings.from_config(config)
        if args.steps:
            settings.wilson_steps = args.steps
        scenario = configuration.build_scenario(config)
        report, results = harness.exp_holonomy(scenario, settings, configuration.build_partner(config))
        out = configuration.output_dir(args.out)
        os.makedirs(out, exist_ok=True)
        write_holonomy_csv(results, os.path.join(out, '%s_holonomy.csv' % config['name']))
    except HolodynException as e:
        logger.error('%s', e)
        return e.exit_code
    for r in results:
        print('%s: phases %s' % (r.loop_descriptor.get('loop'), ' '.join('%.9f' % p for p in r.phases)))
    _print_report(report)
    return errno.EXIT_OK if report.passed else errno.EXIT_CRITERION


def cmd_verify(args):
    try:
        report = harness.verify(seed=args.seed)
    except HolodynException as e:
        logger.error('%s', e)
        return e.exit_code
    _print_report(report)
    return errno.EXIT_OK if report.passed else errno.EXIT_CRITERION


def build_parser():
    parser = argparse.ArgumentParser(prog='holodyn', description='Reservoir-driven holonomies of decoherence-free subspaces')
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Run the experiments of a config')
    run.add_argument('config', help='Config file or bundled config name (%s)' % ', '.join(configuration.bundled()))
    run.add_argument('--out', help='Output directory (default $%s or ./%s)' % (configuration.OUT_ENV, configuration.DEFAULT_OUT))
    run.add_argument('--jobs', type=int, default=1, help='Parallel runs in a sweep')
    run.add_argument('--seed', type=int, default=None, help='Override the config seed')
    run.set_defaults(func=cmd_run)

    hol = sub.add_parser('holonomy', help='Wilson loop of a config scenario only')
    hol.add_argument('config')
    hol.add_argument('--steps', type=int, default=None, help='Wilson loop grid size')
    hol.add_argument('--out', help='Output directory')
    hol.set_defaults(func=cmd_holonomy)

    ver = sub.add_parser('verify', help='Structural invariant suite')
    ver.add_argument('--seed', type=int, default=0)
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse usage errors are configuration errors
        return errno.EXIT_PRECONDITION if e.code else errno.EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    return args.func(args)


if __name__ == '__main__':
    sys.exit(main())
