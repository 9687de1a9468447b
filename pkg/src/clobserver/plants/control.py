"""Tracking reference and computed-torque controller for the manipulator.

The controller is plant-side plumbing and uses the true state and the true
friction parameters; estimators never see its internals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ClObserverConfigError
from ..numerics import as_vector
from .manipulator import TwoLinkManipulator, friction_basis

__all__ = ['SinusoidalReference', 'ControllerGains', 'PDTrackingController', 'pd_tracking_controller']


@dataclass(frozen=True)
class SinusoidalReference:
    """``p_d(t) = sin(3t) + sin(2t)`` on every joint."""

    joints: int = 2

    def position(self, t: float) -> np.ndarray:
        return np.full(self.joints, np.sin(3 * t) + np.sin(2 * t))

    def velocity(self, t: float) -> np.ndarray:
        return np.full(self.joints, 3 * np.cos(3 * t) + 2 * np.cos(2 * t))

    def acceleration(self, t: float) -> np.ndarray:
        return np.full(self.joints, -9 * np.sin(3 * t) - 4 * np.sin(2 * t))

    def state(self, t: float) -> np.ndarray:
        return np.concatenate((self.position(t), self.velocity(t)))


@dataclass(frozen=True)
class ControllerGains:
    """Scalar position and velocity gains, applied as ``kp*I`` and ``kd*I``."""

    kp: float = 100.0
    kd: float = 20.0

    def __post_init__(self):
        if self.kp < 0 or self.kd < 0:
            raise ClObserverConfigError(f'controller gains must be non-negative, got kp={self.kp}, kd={self.kd}')


def pd_tracking_controller(x, t: float, gains: ControllerGains, plant: TwoLinkManipulator,
                           reference: SinusoidalReference = SinusoidalReference()) -> np.ndarray:
    """``u = M(p)(q_d'' + kd (q_d - q) + kp (p_d - p)) + V_m(p, q) q + Y(q) theta``."""
    x = as_vector(x, 4, 'state')
    p, q = x[:2], x[2:]
    command = (reference.acceleration(t)
               + gains.kd * (reference.velocity(t) - q)
               + gains.kp * (reference.position(t) - p))
    return (plant.mass(p) @ command
            + plant.coriolis(p, q) @ q
            + friction_basis(q) @ plant.theta_true[:, 0])


class PDTrackingController:
    """Callable ``u = controller(x, t)`` bound to a plant, reference and gains."""

    def __init__(self, plant: TwoLinkManipulator, reference: SinusoidalReference = None,
                 gains: ControllerGains = None):
        self.plant = plant
        self.reference = reference or SinusoidalReference(plant.n)
        self.gains = gains or ControllerGains()

    def __call__(self, x, t: float) -> np.ndarray:
        return pd_tracking_controller(x, t, self.gains, self.plant, self.reference)
