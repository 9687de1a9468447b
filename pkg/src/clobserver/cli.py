"""``clobserver`` command line.

Exit status is 0 for a completed run, 1 for a usage, configuration or other
run error (nothing is written) and 2 for a run that halted (the partial log
is written). The log files are written with :func:`async_write_run_log`.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import RunConfig
from .errors import ClObserverConfigError, ClObserverError, ClObserverRunHaltedError
from .runlog import RunLog, async_write_run_log
from .simulation import run

__all__ = ['main', 'build_parser', 'load_config']

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_HALTED = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='clobserver',
        description='Simulate the concurrent-learning velocity observer and parameter estimator '
                    'on the two-link manipulator and write the run log.')
    parser.add_argument('--config', type=Path, default=None,
                        help='key = value run configuration (default: built-in noise-free run)')
    parser.add_argument('--out', type=Path, required=True,
                        help='directory for trajectory.csv, events.csv and meta.txt')
    parser.add_argument('--seed', type=int, default=None, help='noise seed, overrides the config')
    parser.add_argument('--override', action='append', default=[], metavar='KEY=VALUE',
                        help='override one config key; repeatable')
    parser.add_argument('--duration', type=float, default=None,
                        help='simulated seconds, overrides the config')
    parser.add_argument('--quiet', action='store_true', help='only log warnings and errors')
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config is not None else RunConfig.noise_free()
    config = config.with_overrides(args.override)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    if args.duration is not None:
        config = config.replace(duration=args.duration)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_USAGE

    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        config = load_config(args)
    except ClObserverConfigError as e:
        print(f'clobserver: {e}', file=sys.stderr)
        return EXIT_USAGE

    try:
        log = run(config)
    except ClObserverRunHaltedError as e:
        _write(e.log, args.out)
        print(f'clobserver: {e}', file=sys.stderr)
        return EXIT_HALTED
    except ClObserverError as e:
        logger.error('run failed: %s', e)
        print(f'clobserver: {e}', file=sys.stderr)
        return EXIT_USAGE

    _write(log, args.out)
    summary = log.summary()
    if not args.quiet:
        print(f'purges={summary.purge_count} '
              f'theta_error={summary.final_parameter_error:.6g} '
              f'relative_theta_error={summary.relative_parameter_error:.6g} '
              f'state_error={summary.final_state_error:.6g}')
    return EXIT_OK


def _write(log: RunLog, out_dir: Path) -> None:
    asyncio.run(async_write_run_log(log, out_dir))


if __name__ == '__main__':
    sys.exit(main())
