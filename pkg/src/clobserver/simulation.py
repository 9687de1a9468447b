"""Fixed-step closed-loop simulation.

Each step at ``t_k`` measures the position, computes the tracking input from
the true state, advances the observer, records the window samples, offers a
data point to the purging logic every ``candidate_period``, advances the
parameter estimator against the main stack, and finally advances the true
plant by forward Euler. Only the controller and the plant integrator see the
true velocity.
"""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np

from .config import RunConfig
from .errors import (ClObserverError, ClObserverGainDivergenceError, ClObserverInsufficientHistoryError,
                     ClObserverNonFiniteError, ClObserverRunHaltedError, ClObserverSingularMatrixError)
from .estimator import EstimatorState, GammaMonitor, estimator_step
from .history import DataPoint, HistoryStack, PurgeController, purge_tick
from .observer import ObserverState, observer_step
from .plants import PlantModel
from .plants.control import PDTrackingController
from .plants.manipulator import TwoLinkManipulator
from .plants.noise import measure
from .runlog import RunLog, RunRecord
from .windows import TripletRecorder

__all__ = ['run']

logger = logging.getLogger(__name__)

_HALTING_ERRORS = (ClObserverGainDivergenceError, ClObserverInsufficientHistoryError,
                   ClObserverNonFiniteError, ClObserverSingularMatrixError)


def run(config: RunConfig, *, on_record: Callable[[RunRecord], None] = None,
        plant: PlantModel = None) -> RunLog:
    """Simulates ``config.duration`` seconds and returns the run log.

    ``on_record`` receives every logged :class:`RunRecord` as it is produced.
    ``plant`` defaults to the two-link manipulator, which is also the plant the
    tracking controller is built for.

    Raises :class:`ClObserverRunHaltedError` carrying the partial log when the
    gain diverges or a numerical kernel fails mid-run.
    """
    plant = plant or TwoLinkManipulator()
    nominal = plant.nominal()
    n, parameters = plant.n, plant.p
    theta_true = plant.theta_true
    dt = config.sample_period

    log = RunLog(config, theta_true, plant.n, plant.m)
    steps = config.steps
    if steps == 0:
        logger.info('zero-length run, nothing to simulate')
        return log

    controller = PDTrackingController(plant, gains=config.controller_gains())
    noise = config.noise_model()
    window = config.window_config()
    recorder = TripletRecorder(window, n, parameters)
    observer_gains = config.observer_gains()
    estimator_gains = config.estimator_gains()
    monitor = GammaMonitor.from_gains(estimator_gains)
    log.monitor = monitor

    if config.init_stack_full_rank:
        main = HistoryStack.synthetic_full_rank(config.stack_capacity, parameters, n, config.init_stack_scale)
    else:
        main = HistoryStack.zero_filled(config.stack_capacity, parameters, n)
    purging = PurgeController.start(main, config.purge_policy(), config.start_time)
    estimator = EstimatorState.initial(parameters, theta_true.shape[1], config.gamma0_scale)
    gamma0 = estimator.gamma
    monitor.observe(config.start_time, gamma0)
    candidate_steps = config.candidate_steps

    logger.info('running %d steps of %r s (N=%d, tau1=%r, tau2=%r, noise variance %r, seed %d)',
                steps, dt, config.stack_capacity, config.tau1, config.tau2,
                config.noise_variance, config.seed)

    x = np.zeros(2 * n)
    observer = None
    t = config.start_time
    try:
        for k in range(steps + 1):
            t = config.start_time + k * dt
            p_measured = measure(x[:n], noise)
            if observer is None:
                observer = ObserverState.initial(p_measured)
            u = controller(x, t)

            if k % config.decimation == 0 or k == steps:
                record = _snapshot(t, x, observer, estimator, purging, theta_true, monitor, u)
                log.append_record(record)
                if on_record is not None:
                    on_record(record)
            if k == steps:
                break

            known, sigma = nominal.evaluate(observer.x_hat, u)
            next_observer = observer_step(observer, p_measured, u, estimator.theta_hat,
                                          nominal, observer_gains, dt, evaluation=(known, sigma))
            recorder.record(t, p_measured, known, sigma)
            if k % candidate_steps == 0 and window.ready(t):
                candidate = DataPoint.from_triplet(recorder.triplet(t), t)
                purging, purged = purge_tick(purging, t, candidate, on_event=log.append_event)
                if purged and config.gamma_reset_on_purge:
                    estimator = estimator.reset_gamma(gamma0)
            estimator = estimator_step(estimator, purging.main, estimator_gains, dt,
                                       monitor=monitor, t=t + dt)
            x = plant.euler_step(x, u, dt)
            observer = next_observer
            log.steps = k + 1
    except _HALTING_ERRORS as e:
        _finish(log, purging)
        log.halt_reason = f'{type(e).__name__}: {e}'
        logger.error('run halted at t=%.4f after %d steps: %s', t, log.steps, log.halt_reason)
        raise ClObserverRunHaltedError(f'run halted at t={t!r}: {e}', log, e) from e
    except ClObserverError:
        _finish(log, purging)
        raise

    _finish(log, purging)
    summary = log.summary()
    logger.info('run finished: %d purges, |theta_tilde| = %.4g, |x_tilde| = %.4g',
                summary.purge_count, summary.final_parameter_error, summary.final_state_error)
    return log


def _finish(log: RunLog, purging: PurgeController) -> None:
    log.main_stack = purging.main
    log.purge_count = purging.purge_count


def _snapshot(t: float, x: np.ndarray, observer: ObserverState, estimator: EstimatorState,
              purging: PurgeController, theta_true: np.ndarray, monitor: GammaMonitor,
              u: np.ndarray) -> RunRecord:
    n = observer.p_hat.shape[0]
    gamma_min, gamma_max = monitor.last
    return RunRecord(
        time=t,
        p=x[:n].copy(),
        q=x[n:].copy(),
        p_hat=observer.p_hat,
        q_hat=observer.q_hat,
        theta_hat=estimator.theta_hat.ravel().copy(),
        state_error=float(np.linalg.norm(x - observer.x_hat)),
        parameter_error=float(np.linalg.norm(theta_true - estimator.theta_hat)),
        main_smin=purging.main.smin,
        transient_smin=purging.transient.smin,
        gamma_eig_min=gamma_min,
        gamma_eig_max=gamma_max,
        u=np.array(u, dtype=np.float64),
    )
