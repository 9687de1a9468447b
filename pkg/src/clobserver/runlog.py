"""Run logs and their on-disk form.

A finished (or halted) run is written as three files:

``trajectory.csv``
    a header row, then one row per logged step
``events.csv``
    ``time,event,detail`` rows, one per history-stack decision
``meta.txt``
    run metadata followed by a ``[config]`` table echoing the configuration

Numbers are written with ``repr(float)``, the shortest text that reads back
to the same value, and nothing depends on the wall clock, so equal runs give
byte-identical files.

:func:`write_run_log` and :func:`async_write_run_log` are the blocking and
the asyncio writers of the same files; the command line uses the latter.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import aiofiles
import aiofiles.os
import numpy as np

from .config import RunConfig
from .errors import ClObserverSingularMatrixError, ClObserverTimeGridError
from .estimator import GammaMonitor, batch_least_squares
from .history import HistoryEvent, HistoryStack, is_full_rank
from .plants.noise import RNG_ALGORITHM

__all__ = [
    'RunRecord',
    'RunSummary',
    'RunLog',
    'TRAJECTORY_FILE',
    'EVENTS_FILE',
    'META_FILE',
    'write_run_log',
    'async_write_run_log',
]

logger = logging.getLogger(__name__)

TRAJECTORY_FILE = 'trajectory.csv'
EVENTS_FILE = 'events.csv'
META_FILE = 'meta.txt'


@dataclass(frozen=True, eq=False)
class RunRecord:
    """Snapshot of one logged step; every quantity refers to ``time``."""

    time: float
    p: np.ndarray
    q: np.ndarray
    p_hat: np.ndarray
    q_hat: np.ndarray
    theta_hat: np.ndarray
    state_error: float
    parameter_error: float
    main_smin: float
    transient_smin: float
    gamma_eig_min: float
    gamma_eig_max: float
    u: np.ndarray

    @staticmethod
    def columns(n: int, parameters: int, m: int) -> List[str]:
        def indexed(name, count):
            return [f'{name}{i + 1}' for i in range(count)]
        return (['time'] + indexed('p', n) + indexed('q', n) + indexed('p_hat', n) + indexed('q_hat', n)
                + indexed('theta_hat', parameters)
                + ['state_error', 'parameter_error', 'main_smin', 'transient_smin',
                   'gamma_eig_min', 'gamma_eig_max']
                + indexed('u', m))

    def row(self) -> List[float]:
        return ([self.time, *self.p, *self.q, *self.p_hat, *self.q_hat, *self.theta_hat.ravel(),
                 self.state_error, self.parameter_error, self.main_smin, self.transient_smin,
                 self.gamma_eig_min, self.gamma_eig_max, *self.u])


@dataclass(frozen=True, eq=False)
class RunSummary:
    final_parameter_error: float
    relative_parameter_error: float
    final_state_error: float
    purge_count: int
    gamma_eig_min: float
    gamma_eig_max: float
    gamma_violations: int
    batch_estimate: Optional[np.ndarray]
    halted: bool


class RunLog:
    """Records, history events and metadata of one run.

    The simulation appends to it as it goes; a halted run's log holds
    everything up to the failing step.
    """

    def __init__(self, config: RunConfig, theta_true: np.ndarray, n: int, m: int):
        self.config = config
        self.theta_true = np.array(theta_true, dtype=np.float64)
        self.n = n
        self.m = m
        self.steps = 0
        self.purge_count = 0
        self.halt_reason: Optional[str] = None
        self.main_stack: Optional[HistoryStack] = None
        self.monitor: Optional[GammaMonitor] = None
        self._records: List[RunRecord] = []
        self._events: List[HistoryEvent] = []

    @property
    def records(self) -> Tuple[RunRecord, ...]:
        return tuple(self._records)

    @property
    def events(self) -> Tuple[HistoryEvent, ...]:
        return tuple(self._events)

    @property
    def halted(self) -> bool:
        return self.halt_reason is not None

    def append_record(self, record: RunRecord) -> None:
        if self._records and not record.time > self._records[-1].time:
            raise ClObserverTimeGridError(f'record at t={record.time!r} is not after t={self._records[-1].time!r}')
        self._records.append(record)

    def append_event(self, event: HistoryEvent) -> None:
        self._events.append(event)

    def columns(self) -> List[str]:
        return RunRecord.columns(self.n, self.theta_true.size, self.m)

    def metadata(self) -> Dict[str, object]:
        from . import __version__

        meta = {
            'version': __version__,
            'numpy_version': np.__version__,
            'rng_algorithm': RNG_ALGORITHM,
            'seed': self.config.seed,
            'steps': self.steps,
            'records': len(self._records),
            'events': len(self._events),
            'purge_count': self.purge_count,
            'halted': self.halted,
            'effective_k_theta': self.config.effective_k_theta,
            'effective_dwell_time': self.config.effective_dwell_time,
        }
        if self.halted:
            meta['halt_reason'] = self.halt_reason
        if self.monitor is not None and self.monitor.observed_min <= self.monitor.observed_max:
            meta['gamma_observed_min'] = self.monitor.observed_min
            meta['gamma_observed_max'] = self.monitor.observed_max
            meta['gamma_violations'] = self.monitor.violations
        return meta

    def summary(self) -> RunSummary:
        """Final errors, purge count, observed ``Gamma`` range and the batch estimate.

        The batch estimate is present when the final main stack is full rank.
        """
        last = self._records[-1] if self._records else None
        theta_norm = float(np.linalg.norm(self.theta_true))
        batch = None
        if self.main_stack is not None and is_full_rank(self.main_stack, self.config.c_lower):
            try:
                batch = batch_least_squares(self.main_stack)
            except ClObserverSingularMatrixError:
                logger.debug('final main stack is too ill-conditioned for a batch estimate')
        monitor = self.monitor or GammaMonitor()
        return RunSummary(
            final_parameter_error=last.parameter_error if last else float('nan'),
            relative_parameter_error=last.parameter_error / theta_norm if last and theta_norm else float('nan'),
            final_state_error=last.state_error if last else float('nan'),
            purge_count=self.purge_count,
            gamma_eig_min=monitor.observed_min,
            gamma_eig_max=monitor.observed_max,
            gamma_violations=monitor.violations,
            batch_estimate=batch,
            halted=self.halted,
        )

    def render_trajectory(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow(self.columns())
        for record in self._records:
            writer.writerow([repr(float(v)) for v in record.row()])
        return buf.getvalue()

    def render_events(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow(['time', 'event', 'detail'])
        for event in self._events:
            writer.writerow([repr(float(event.time)), event.kind, event.detail])
        return buf.getvalue()

    def render_meta(self) -> str:
        lines = ['# clobserver run metadata']
        lines += [f'{key} = {_meta_value(value)}' for key, value in self.metadata().items()]
        lines += ['', '[config]', self.config.as_toml()]
        return '\n'.join(lines)

    def rendered(self) -> Dict[str, str]:
        return {
            TRAJECTORY_FILE: self.render_trajectory(),
            EVENTS_FILE: self.render_events(),
            META_FILE: self.render_meta(),
        }


def write_run_log(log: RunLog, out_dir: Union[str, Path]) -> List[Path]:
    """Writes the three log files into ``out_dir`` (created if missing)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in log.rendered().items():
        path = out_dir / name
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        written.append(path)
    logger.info('wrote run log to %s', out_dir)
    return written


async def async_write_run_log(log: RunLog, out_dir: Union[str, Path]) -> List[Path]:
    """Asynchronous :func:`write_run_log`."""
    out_dir = Path(out_dir)
    await aiofiles.os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, text in log.rendered().items():
        path = out_dir / name
        async with aiofiles.open(path, 'w', encoding='utf-8', newline='') as f:
            await f.write(text)
        written.append(path)
    logger.info('wrote run log to %s', out_dir)
    return written


def _meta_value(value) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return json.dumps(str(value))
