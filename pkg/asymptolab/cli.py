"""Command-line interface: ``asymptolab <command> [options]``.

Exit codes are 0 on success, 1 on a domain or convergence failure and 2 on a usage or parse failure.
The ``ASYMPTOLAB_OUT`` environment variable overrides ``--out``.
"""
import argparse
import logging
import os
import sys

import pandas as pd

from .config import load_config, config_from_mapping, reference_config_path
from .exceptions import ConfigError
from .pipeline import Experiment, KINDS
from .utils import write_csv

logger = logging.getLogger('asymptolab')

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        logger.error(message)
        raise SystemExit(EXIT_USAGE)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=str(reference_config_path()),
                        help="experiment YAML file (default: the packaged reference experiment)")
    common.add_argument('--out', default=None, help="output directory (overrides the config)")
    common.add_argument('--jobs', type=int, default=None, help="parallel (sector, eps) jobs")
    common.add_argument('--seed', type=int, default=None, help="seed of the sampled certification checks")
    common.add_argument('--no-solve', action='store_true', help="reuse omega checkpoints instead of solving")
    common.add_argument('--verbose', action='store_true', help="debug logging")

    parser = _Parser(prog='asymptolab', description="Inner and outer solutions of a singularly perturbed "
                                                    "two-time problem through Borel-Laplace transforms.")
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True
    sub.add_parser('validate', parents=[common], help="check the hypotheses, coverings and admissible sets")
    sub.add_parser('solve', parents=[common], help="solve the Borel-plane equation for every (sector, eps)")
    sub.add_parser('inner', parents=[common], help="sample the inner solutions")
    sub.add_parser('outer', parents=[common], help="sample the outer solutions")
    flat = sub.add_parser('flatness', parents=[common], help="fit the flatness order of sector differences")
    flat.add_argument('--which', choices=KINDS, default='inner')
    sub.add_parser('demos', parents=[common], help="small divisors, kernel bounds and special functions")
    return parser


def _experiment(args):
    config = load_config(args.config)
    out = os.environ.get('ASYMPTOLAB_OUT') or args.out
    if args.seed is not None:
        config = config_from_mapping(dict(config.raw, seed=args.seed))
    return Experiment(config, out_dir=out)


def cmd_validate(experiment, args):
    report = experiment.validate()
    write_csv(report.to_frame(), experiment.out_dir / 'validation.csv', experiment.sha)
    for name in report.failed:
        logger.error(f"check failed: {name}: {report[name].detail}")
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_solve(experiment, args):
    report = experiment.validate()
    if not report.passed:
        for name in report.failed:
            logger.error(f"check failed: {name}: {report[name].detail}")
        logger.error("not solving an invalid configuration; see 'asymptolab validate'")
        return EXIT_FAILURE
    frames, failures = [], 0
    for kind in KINDS:
        frame, failed = experiment.run('solve_job', kind, jobs=args.jobs)
        frames.append(frame)
        failures += failed
    log = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    write_csv(log, experiment.out_dir / 'convergence.csv', experiment.sha)
    return EXIT_OK if failures == 0 else EXIT_FAILURE


def _cmd_samples(kind):
    def command(experiment, args):
        frame, failures = experiment.run('sample_job', kind, jobs=args.jobs, no_solve=args.no_solve)
        write_csv(frame, experiment.out_dir / f'{kind}_summary.csv', experiment.sha)
        return EXIT_OK if failures == 0 else EXIT_FAILURE
    return command


FLATNESS_TOLERANCE, FLATNESS_R_SQUARED = 0.15, 0.99


def flatness_target(spec, which):
    r""":math:`\lambda_1 k_1` for inner differences, :math:`\lambda_2 k_2` for outer ones."""
    return spec.lambda1 * spec.k1 if which == 'inner' else spec.lambda2 * spec.k2


def cmd_flatness(experiment, args):
    try:
        frame = experiment.flatness(args.which)
    except (ValueError, RuntimeError, KeyError) as e:
        logger.error(f"flatness {args.which} failed: {type(e).__name__}: {e}")
        return EXIT_FAILURE
    if frame.empty:
        logger.error(f"flatness {args.which}: no overlap was fitted")
        return EXIT_FAILURE
    target = flatness_target(experiment.spec, args.which)
    passed = True
    for row in frame.itertuples():
        ok = abs(row.order - target) <= FLATNESS_TOLERANCE * target and row.r_squared > FLATNESS_R_SQUARED
        passed = passed and ok
        log = logger.info if ok else logger.error
        log(f"{args.which} overlap {row.h}: k = {row.order:.4g} (expected {target}), R^2 = {row.r_squared:.6f}")
    return EXIT_OK if passed else EXIT_FAILURE


def cmd_demos(experiment, args):
    return EXIT_OK if experiment.demos() else EXIT_FAILURE


COMMANDS = {
    'validate': cmd_validate,
    'solve': cmd_solve,
    'inner': _cmd_samples('inner'),
    'outer': _cmd_samples('outer'),
    'flatness': cmd_flatness,
    'demos': cmd_demos,
}


def main(argv=None):
    """Entry point; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        experiment = _experiment(args)
        if args.jobs is None:
            args.jobs = experiment.config.jobs
        return COMMANDS[args.command](experiment, args)
    except ConfigError as e:
        logger.error(f"configuration error: {e}")
        return EXIT_USAGE
    except (ValueError, RuntimeError, FileNotFoundError, KeyError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
