"""Seeded Gaussian measurement noise on the position output."""

from __future__ import annotations

import numpy as np

from ..errors import ClObserverConfigError
from ..numerics import as_vector

__all__ = ['NoiseModel', 'measure', 'RNG_ALGORITHM']

RNG_ALGORITHM = 'numpy.random.PCG64'


class NoiseModel:
    """Zero-mean Gaussian noise with covariance ``variance * I``.

    Draws come from a ``PCG64`` stream seeded with ``seed``; equal seeds give
    bit-identical sequences.
    """

    def __init__(self, variance: float = 0.0, seed: int = 0):
        if not variance >= 0:
            raise ClObserverConfigError(f'noise variance must be non-negative, got {variance}')
        self._variance = float(variance)
        self._seed = int(seed)
        self._rng = np.random.Generator(np.random.PCG64(self._seed))

    @property
    def variance(self) -> float:
        return self._variance

    @property
    def seed(self) -> int:
        return self._seed

    def draw(self, size: int) -> np.ndarray:
        return self._rng.normal(0.0, np.sqrt(self._variance), size)


def measure(p_true, noise: NoiseModel) -> np.ndarray:
    """``p_true + w``; with zero variance ``p_true`` comes back unchanged and no draw is made."""
    p_true = as_vector(p_true, name='position')
    if noise is None or noise.variance == 0.0:
        return p_true.copy()
    return p_true + noise.draw(p_true.shape[0])
