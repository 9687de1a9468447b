"""Concurrent-learning parameter estimator.

The parameter estimate follows the stored data of the main history stack,

    theta_hat' = k_theta Gamma sum_i G_hat_i (P_i - F_hat_i - G_hat_i^T theta_hat)

and the least-squares gain follows ``Gamma' = beta1 Gamma - k_theta Gamma G Gamma``
where ``G`` is the stack's Gram matrix. Both are integrated by forward Euler.
The bounds ``gamma_min I <= Gamma <= gamma_max I`` are monitored, never
enforced.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .errors import (ClObserverConfigError, ClObserverGainDivergenceError, ClObserverShapeError,
                     ClObserverTimeGridError)
from .history import HistoryStack
from .numerics import as_matrix, multiply, solve_spd, symmetric_eigenvalues, symmetrize

__all__ = [
    'EstimatorGains',
    'EstimatorState',
    'GammaMonitor',
    'theta_dot',
    'gamma_dot',
    'estimator_step',
    'batch_least_squares',
]

logger = logging.getLogger(__name__)

PD_SLACK = 1e-9


@dataclass(frozen=True)
class EstimatorGains:
    k_theta: float
    beta1: float = 0.0
    gamma_min: Optional[float] = None
    gamma_max: Optional[float] = None

    def __post_init__(self):
        if not self.k_theta > 0:
            raise ClObserverConfigError(f'k_theta must be positive, got {self.k_theta}')
        if not self.beta1 >= 0:
            raise ClObserverConfigError(f'beta1 must be non-negative, got {self.beta1}')
        if self.gamma_min is not None and not self.gamma_min > 0:
            raise ClObserverConfigError(f'gamma_min must be positive, got {self.gamma_min}')
        if self.gamma_min is not None and self.gamma_max is not None and self.gamma_min > self.gamma_max:
            raise ClObserverConfigError(
                f'gamma_min {self.gamma_min} exceeds gamma_max {self.gamma_max}')


@dataclass(frozen=True, eq=False)
class EstimatorState:
    theta_hat: np.ndarray
    gamma: np.ndarray

    @classmethod
    def initial(cls, parameters: int, columns: int = 1, gamma0_scale: float = 1.0) -> 'EstimatorState':
        """``theta_hat = 0`` and ``Gamma = gamma0_scale * I``."""
        if not gamma0_scale > 0:
            raise ClObserverConfigError(f'gamma0_scale must be positive, got {gamma0_scale}')
        return cls(np.zeros((parameters, columns)), gamma0_scale * np.eye(parameters))

    @property
    def parameters(self) -> int:
        return self.gamma.shape[0]

    def reset_gamma(self, gamma0: np.ndarray) -> 'EstimatorState':
        return replace(self, gamma=np.array(gamma0, dtype=np.float64))


class GammaMonitor:
    """Tracks the eigenvalue range of ``Gamma`` and counts bound violations.

    ``last`` holds the extreme eigenvalues of the most recent observation.
    """

    def __init__(self, gamma_min: Optional[float] = None, gamma_max: Optional[float] = None):
        self.gamma_min = gamma_min
        self.gamma_max = gamma_max
        self.observed_min = np.inf
        self.observed_max = -np.inf
        self.violations = 0
        self.last = (np.nan, np.nan)

    @classmethod
    def from_gains(cls, gains: EstimatorGains) -> 'GammaMonitor':
        return cls(gains.gamma_min, gains.gamma_max)

    def observe(self, t: float, gamma: np.ndarray) -> Tuple[float, float]:
        """Records the extreme eigenvalues of ``gamma`` at time ``t`` and returns them."""
        eigenvalues = symmetric_eigenvalues(gamma)
        lowest, highest = float(eigenvalues[0]), float(eigenvalues[-1])
        self.observed_min = min(self.observed_min, lowest)
        self.observed_max = max(self.observed_max, highest)
        self.last = (lowest, highest)
        if (self.gamma_min is not None and lowest < self.gamma_min) or \
                (self.gamma_max is not None and highest > self.gamma_max):
            self.violations += 1
            log = logger.warning if self.violations == 1 else logger.debug
            log('t=%r: Gamma eigenvalues [%.4g, %.4g] leave [%s, %s]',
                t, lowest, highest, self.gamma_min, self.gamma_max)
        return lowest, highest


def theta_dot(state: EstimatorState, stack: HistoryStack, gains: EstimatorGains) -> np.ndarray:
    """``k_theta Gamma sum_i G_hat_i (P_i - F_hat_i - G_hat_i^T theta_hat)``.

    The sum equals ``moment - gram @ theta_hat``, which is what gets evaluated.
    """
    _check_dimensions(state, stack)
    if not len(stack):
        return np.zeros_like(state.theta_hat)
    residual = stack.moment - multiply(stack.gram, state.theta_hat)
    return gains.k_theta * multiply(state.gamma, residual)


def gamma_dot(state: EstimatorState, stack: HistoryStack, gains: EstimatorGains) -> np.ndarray:
    """``beta1 Gamma - k_theta Gamma G Gamma``."""
    _check_dimensions(state, stack)
    gamma = state.gamma
    return gains.beta1 * gamma - gains.k_theta * multiply(multiply(gamma, stack.gram), gamma)


def estimator_step(state: EstimatorState, stack: HistoryStack, gains: EstimatorGains, dt: float,
                   monitor: GammaMonitor = None, t: float = None) -> EstimatorState:
    """One forward-Euler step of ``theta_hat`` and ``Gamma``.

    ``Gamma`` is re-symmetrised after the step and must stay positive definite;
    when a ``monitor`` is given it records the new eigenvalue range.
    """
    if dt < 0:
        raise ClObserverTimeGridError(f'estimator step needs dt >= 0, got {dt}')
    if dt == 0:
        return state
    theta = as_matrix(state.theta_hat + dt * theta_dot(state, stack, gains), name='theta_hat')
    gamma = symmetrize(state.gamma + dt * gamma_dot(state, stack, gains))
    slack = PD_SLACK * float(np.max(np.abs(gamma)))
    try:
        np.linalg.cholesky(gamma + slack * np.eye(gamma.shape[0]))
    except np.linalg.LinAlgError as e:
        raise ClObserverGainDivergenceError(
            f'least-squares gain is no longer positive definite at t={t!r}') from e
    if monitor is not None:
        monitor.observe(t, gamma)
    return EstimatorState(theta, gamma)


def batch_least_squares(stack: HistoryStack) -> np.ndarray:
    """Normal-equations solution minimising ``sum_i |P_i - F_hat_i - G_hat_i^T theta|^2``."""
    return solve_spd(stack.gram, stack.moment)


def _check_dimensions(state: EstimatorState, stack: HistoryStack) -> None:
    p = state.parameters
    if state.gamma.shape != (p, p) or state.theta_hat.shape[0] != p or stack.parameters != p:
        raise ClObserverShapeError(
            f'theta_hat {state.theta_hat.shape}, Gamma {state.gamma.shape} and a stack of '
            f'{stack.parameters} parameters do not agree')
    if len(stack) and stack.moment.shape != state.theta_hat.shape:
        raise ClObserverShapeError(
            f'stack data gives a {stack.moment.shape} parameter matrix, theta_hat is {state.theta_hat.shape}')
