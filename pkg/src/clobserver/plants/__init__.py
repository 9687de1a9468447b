"""Second-order plants ``p' = q, q' = f0(x, u) + g(x, u)``, ``y = p``.

The unknown part is linear in the parameters, ``g(x, u) = Sigma(x, u)^T theta``,
with ``Sigma`` a ``p x n`` regressor matrix. Observers and estimators only
ever receive the :class:`NominalModel` view of a plant, which carries ``f0``
and ``Sigma`` but not ``theta``.
"""

from __future__ import annotations

import abc
from typing import Callable, Tuple

import numpy as np

from ..numerics import as_vector

__all__ = ['PlantModel', 'NominalModel']

Evaluation = Tuple[np.ndarray, np.ndarray]


class NominalModel:
    """The known dynamics ``f0`` and the regressor ``Sigma`` of a plant."""

    def __init__(self, n: int, m: int, p: int, evaluate: Callable[[np.ndarray, np.ndarray], Evaluation]):
        self.n = n
        self.m = m
        self.p = p
        self._evaluate = evaluate

    def evaluate(self, x, u) -> Evaluation:
        """``(f0(x, u), Sigma(x, u))`` with one shared model evaluation."""
        return self._evaluate(x, u)

    def f0(self, x, u) -> np.ndarray:
        return self._evaluate(x, u)[0]

    def regressor(self, x, u) -> np.ndarray:
        return self._evaluate(x, u)[1]


class PlantModel(abc.ABC):
    """Simulation truth for a second-order plant.

    Subclasses implement :meth:`evaluate`; ``theta_true`` is a ``p x 1``
    column so that ``Sigma^T theta_true`` is the ``n``-vector ``g``.
    """

    n: int
    m: int
    p: int

    @property
    @abc.abstractmethod
    def theta_true(self) -> np.ndarray:
        ...

    @abc.abstractmethod
    def evaluate(self, x, u) -> Evaluation:
        ...

    def f0(self, x, u) -> np.ndarray:
        return self.evaluate(x, u)[0]

    def regressor(self, x, u) -> np.ndarray:
        return self.evaluate(x, u)[1]

    def acceleration(self, x, u) -> np.ndarray:
        """True ``q'`` = ``f0 + Sigma^T theta``."""
        known, sigma = self.evaluate(x, u)
        return known + (sigma.T @ self.theta_true)[:, 0]

    def euler_step(self, x, u, dt: float) -> np.ndarray:
        """One forward-Euler step of the true state ``x = (p, q)``."""
        x = as_vector(x, 2 * self.n, 'state')
        q = x[self.n:]
        return np.concatenate((x[:self.n] + dt * q, q + dt * self.acceleration(x, u)))

    def nominal(self) -> NominalModel:
        return NominalModel(self.n, self.m, self.p, self.evaluate)
