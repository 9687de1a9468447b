"""Two-link planar manipulator with joint friction as the unknown part.

``M(p) q' + V_m(p, q) q + Y(q) theta = u`` where ``Y(q)`` stacks a static
(``tanh``) and a viscous friction term per joint, so that

* ``f0(x, u) = M(p)^-1 (u - V_m(p, q) q)``
* ``g(x, u) = -M(p)^-1 Y(q) theta = Sigma(x, u)^T theta``

with ``theta = (static_1, viscous_1, static_2, viscous_2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import ClObserverConfigError, ClObserverSingularMatrixError
from ..numerics import as_vector
from . import PlantModel

__all__ = [
    'ManipulatorParams',
    'TwoLinkManipulator',
    'manipulator_mass',
    'manipulator_coriolis',
    'friction_basis',
    'manipulator_regressor',
    'manipulator_known_dynamics',
]


@dataclass(frozen=True)
class ManipulatorParams:
    a1: float = 3.473
    a2: float = 0.196
    a3: float = 0.242
    theta: Tuple[float, float, float, float] = (5.3, 1.1, 8.45, 2.35)

    def __post_init__(self):
        if len(self.theta) != 4:
            raise ClObserverConfigError(f'the manipulator has 4 friction parameters, got {len(self.theta)}')
        # det M = a1*a2 - a2^2 - a3^2*cos^2(p2), smallest at cos^2 = 1
        if self.a2 <= 0 or self.a1 - 2 * abs(self.a3) <= 0 or \
                self.a1 * self.a2 - self.a2 ** 2 - self.a3 ** 2 <= 0:
            raise ClObserverConfigError('inertia constants do not give a positive definite mass matrix')


def manipulator_mass(p, params: ManipulatorParams = ManipulatorParams()) -> np.ndarray:
    c2 = np.cos(p[1])
    off = params.a2 + params.a3 * c2
    return np.array([[params.a1 + 2 * params.a3 * c2, off],
                     [off, params.a2]])


def manipulator_coriolis(p, q, params: ManipulatorParams = ManipulatorParams()) -> np.ndarray:
    s2 = params.a3 * np.sin(p[1])
    return np.array([[-s2 * q[1], -s2 * (q[0] + q[1])],
                     [s2 * q[0], 0.0]])


def friction_basis(q) -> np.ndarray:
    """``Y(q)``, 2x4: static and viscous friction of each joint."""
    return np.array([[np.tanh(q[0]), q[0], 0.0, 0.0],
                     [0.0, 0.0, np.tanh(q[1]), q[1]]])


def manipulator_regressor(x, u, params: ManipulatorParams = ManipulatorParams()) -> np.ndarray:
    """``Sigma(x, u) = -(M(p)^-1 Y(q))^T``, 4x2."""
    return _evaluate(x, u, params)[1]


def manipulator_known_dynamics(x, u, params: ManipulatorParams = ManipulatorParams()) -> np.ndarray:
    """``f0(x, u) = M(p)^-1 (u - V_m(p, q) q)``."""
    return _evaluate(x, u, params)[0]


class TwoLinkManipulator(PlantModel):
    n = 2
    m = 2
    p = 4

    def __init__(self, params: ManipulatorParams = None):
        self._params = params or ManipulatorParams()
        self._theta = np.array(self._params.theta, dtype=np.float64).reshape(4, 1)

    @property
    def params(self) -> ManipulatorParams:
        return self._params

    @property
    def theta_true(self) -> np.ndarray:
        return self._theta

    def evaluate(self, x, u):
        return _evaluate(x, u, self._params)

    def mass(self, p) -> np.ndarray:
        return manipulator_mass(p, self._params)

    def coriolis(self, p, q) -> np.ndarray:
        return manipulator_coriolis(p, q, self._params)


def _evaluate(x, u, params: ManipulatorParams):
    x = as_vector(x, 4, 'state')
    u = as_vector(u, 2, 'input')
    p, q = x[:2], x[2:]
    try:
        m_inv = np.linalg.inv(manipulator_mass(p, params))
    except np.linalg.LinAlgError as e:
        raise ClObserverSingularMatrixError(f'mass matrix is singular at p={p}') from e
    known = m_inv @ (u - manipulator_coriolis(p, q, params) @ q)
    sigma = -(m_inv @ friction_basis(q)).T
    return known, sigma
