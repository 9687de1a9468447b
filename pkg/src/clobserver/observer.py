"""Output-feedback velocity observer.

The estimator runs ``p_hat' = q_hat`` and
``q_hat' = f0(x_hat, u) + Sigma(x_hat, u)^T theta_hat + nu`` with the feedback
``nu = alpha^2 p_tilde - (k + alpha + beta) eta``. The filter signal ``eta``
is computed from position errors only, through its integral form

    eta(t) = -int (beta + k) eta - int k alpha p_tilde - (k + alpha) p_tilde(t)

which matches the differential form (see :func:`eta_ode_derivative`) exactly
when ``p_tilde(T0) = 0``; :meth:`ObserverState.initial` arranges that by
starting ``p_hat`` at the first measurement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ClObserverConfigError, ClObserverShapeError, ClObserverTimeGridError
from .numerics import add, as_matrix, as_vector, multiply, scale, transpose
from .plants import Evaluation, NominalModel

__all__ = [
    'ObserverGains',
    'ObserverState',
    'feedback_nu',
    'eta_update',
    'eta_ode_derivative',
    'observer_step',
]


@dataclass(frozen=True)
class ObserverGains:
    alpha: float = 2.0
    k: float = 10.0
    beta: float = 2.0

    def __post_init__(self):
        for name in ('alpha', 'k', 'beta'):
            if not getattr(self, name) > 0:
                raise ClObserverConfigError(f'observer gain {name} must be positive, got {getattr(self, name)}')


@dataclass(frozen=True, eq=False)
class ObserverState:
    p_hat: np.ndarray
    q_hat: np.ndarray
    eta: np.ndarray
    eta_integral_state: np.ndarray

    @classmethod
    def initial(cls, p_measured, q_hat=None) -> 'ObserverState':
        """``p_hat`` at the first measurement, ``q_hat`` (default zero), ``eta = 0``."""
        p_hat = as_vector(p_measured, name='p_measured').copy()
        n = p_hat.shape[0]
        q_hat = np.zeros(n) if q_hat is None else as_vector(q_hat, n, 'q_hat').copy()
        return cls(p_hat, q_hat, np.zeros(n), np.zeros(n))

    @property
    def x_hat(self) -> np.ndarray:
        return np.concatenate((self.p_hat, self.q_hat))


def feedback_nu(p_tilde, eta, gains: ObserverGains) -> np.ndarray:
    """``alpha^2 p_tilde - (k + alpha + beta) eta``."""
    return add(scale(p_tilde, gains.alpha ** 2),
               scale(eta, -(gains.k + gains.alpha + gains.beta)))


def eta_update(p_tilde, state: ObserverState, gains: ObserverGains, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluates ``eta`` at the current sample and advances the integral term.

    Returns ``(eta, next_integral)`` where ``eta = -integral - (k + alpha) p_tilde``
    and the integral accumulates ``(beta + k) eta + k alpha p_tilde`` by forward
    Euler over ``dt``.
    """
    p_tilde = as_vector(p_tilde, state.eta_integral_state.shape[0], 'p_tilde')
    eta = -state.eta_integral_state - (gains.k + gains.alpha) * p_tilde
    next_integral = state.eta_integral_state + dt * (
        (gains.beta + gains.k) * eta + gains.k * gains.alpha * p_tilde)
    return eta, next_integral


def eta_ode_derivative(eta, p_tilde, q_tilde, gains: ObserverGains) -> np.ndarray:
    """``eta' = -beta eta - k r - alpha q_tilde`` with ``r = q_tilde + alpha p_tilde + eta``.

    Needs the true velocity error, so it only serves as a simulation oracle.
    """
    r = q_tilde + gains.alpha * p_tilde + eta
    return -gains.beta * eta - gains.k * r - gains.alpha * q_tilde


def observer_step(state: ObserverState, p_measured, u, theta_hat, model: NominalModel,
                  gains: ObserverGains, dt: float, evaluation: Evaluation = None) -> ObserverState:
    """One forward-Euler step of the observer from measured position and input.

    ``evaluation`` is ``model.evaluate(state.x_hat, u)`` when the caller already has it.
    """
    if dt < 0:
        raise ClObserverTimeGridError(f'observer step needs dt >= 0, got {dt}')
    if dt == 0:
        return state
    n = state.p_hat.shape[0]
    p_tilde = as_vector(p_measured, n, 'p_measured') - state.p_hat
    eta, integral = eta_update(p_tilde, state, gains, dt)
    nu = feedback_nu(p_tilde, eta, gains)

    known, sigma = model.evaluate(state.x_hat, u) if evaluation is None else evaluation
    theta_hat = as_matrix(theta_hat, (sigma.shape[0], None), 'theta_hat')
    uncertainty = multiply(transpose(sigma), theta_hat)
    if uncertainty.size != n:
        raise ClObserverShapeError(
            f'regressor {sigma.shape} and theta_hat {theta_hat.shape} do not give an {n}-vector')
    q_hat_dot = known + uncertainty.reshape(n) + nu

    return ObserverState(
        as_vector(state.p_hat + dt * state.q_hat, n, 'p_hat'),
        as_vector(state.q_hat + dt * q_hat_dot, n, 'q_hat'),
        eta,
        integral,
    )
