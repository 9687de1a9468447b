"""Sampled-signal ring buffers and the window operators built on them.

``P(t)`` is the four-point position difference over the two windows, and
``double_integral`` approximates
``f -> int_{t-tau2}^{t} int_{lambda-tau1}^{lambda} f(tau) dtau dlambda``
with one of two rules:

* ``'trapezoid'``, the iterated trapezoidal rule, second order in the
  sample period for smooth integrands;
* ``'euler'``, the nested left-rectangle sum. For positions produced by
  forward Euler from the sampled accelerations it reproduces ``P(t)``
  exactly.

Both return zeros before ``start_time + tau1 + tau2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np
import scipy.integrate

from .errors import (ClObserverConfigError, ClObserverInsufficientHistoryError,
                     ClObserverShapeError, ClObserverTimeGridError)

__all__ = [
    'WindowConfig',
    'SignalBuffer',
    'Triplet',
    'TripletRecorder',
    'window_position_delta',
    'double_integral',
    'compute_triplet',
    'grid_steps',
    'QUADRATURE_TRAPEZOID',
    'QUADRATURE_EULER',
    'QUADRATURES',
]

GRID_TOLERANCE = 1e-12
LOOKUP_TOLERANCE = 1e-9

QUADRATURE_TRAPEZOID = 'trapezoid'
QUADRATURE_EULER = 'euler'
QUADRATURES = (QUADRATURE_TRAPEZOID, QUADRATURE_EULER)


@dataclass(frozen=True)
class WindowConfig:
    """Window lengths ``tau1``, ``tau2`` (seconds) on a fixed sampling grid.

    Both lengths must be integer multiples of ``sample_period`` so that every
    window edge lands on a sample. ``quadrature`` picks the double-integral
    rule, see :func:`double_integral`.
    """

    tau1: float
    tau2: float
    sample_period: float
    start_time: float = 0.0
    quadrature: str = QUADRATURE_TRAPEZOID

    def __post_init__(self):
        if self.quadrature not in QUADRATURES:
            raise ClObserverConfigError(
                f'quadrature must be one of {", ".join(QUADRATURES)}, got {self.quadrature!r}')
        if not self.sample_period > 0:
            raise ClObserverConfigError(f'sample_period must be positive, got {self.sample_period}')
        for name in ('tau1', 'tau2'):
            value = getattr(self, name)
            if not value > 0:
                raise ClObserverConfigError(f'{name} must be positive, got {value}')
            grid_steps(value, self.sample_period, name)

    @property
    def tau1_steps(self) -> int:
        return grid_steps(self.tau1, self.sample_period, 'tau1')

    @property
    def tau2_steps(self) -> int:
        return grid_steps(self.tau2, self.sample_period, 'tau2')

    @property
    def span_steps(self) -> int:
        return self.tau1_steps + self.tau2_steps

    @property
    def span(self) -> float:
        return self.tau1 + self.tau2

    @property
    def capacity(self) -> int:
        return math.ceil(self.span / self.sample_period - LOOKUP_TOLERANCE) + 1

    def ready(self, t: float) -> bool:
        """True once ``t >= start_time + tau1 + tau2``."""
        return t >= self.start_time + self.span - LOOKUP_TOLERANCE


class SignalBuffer:
    """Fixed-capacity, time-ordered buffer of equally spaced samples.

    Each sample is an array of ``value_shape``. Once full, appending evicts
    the oldest sample. Timestamps must advance by exactly one
    ``sample_period``.
    """

    def __init__(self, sample_period: float, capacity: int, value_shape: Tuple[int, ...] = ()):
        if capacity < 1:
            raise ClObserverConfigError(f'capacity must be at least 1, got {capacity}')
        self._sample_period = float(sample_period)
        self._capacity = int(capacity)
        self._value_shape = tuple(value_shape)
        self._times = np.zeros(self._capacity)
        self._values = np.zeros((self._capacity,) + self._value_shape)
        self._head = 0
        self._size = 0

    @classmethod
    def for_window(cls, cfg: WindowConfig, value_shape: Tuple[int, ...] = ()) -> 'SignalBuffer':
        return cls(cfg.sample_period, cfg.capacity, value_shape)

    @property
    def sample_period(self) -> float:
        return self._sample_period

    @property
    def capacity(self) -> int:
        return self._capacity

    @property
    def value_shape(self) -> Tuple[int, ...]:
        return self._value_shape

    def __len__(self) -> int:
        return self._size

    @property
    def oldest_time(self) -> float:
        self._require_samples()
        return float(self._times[(self._head - self._size) % self._capacity])

    @property
    def latest_time(self) -> float:
        self._require_samples()
        return float(self._times[(self._head - 1) % self._capacity])

    def append(self, t: float, value) -> None:
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self._value_shape:
            raise ClObserverShapeError(
                f'sample shape {value.shape} does not match buffer shape {self._value_shape}')
        if self._size:
            gap = t - self.latest_time
            if abs(gap - self._sample_period) > GRID_TOLERANCE + 8 * np.finfo(float).eps * abs(t):
                raise ClObserverTimeGridError(
                    f'sample at {t!r} is {gap!r} s after the previous one, '
                    f'expected {self._sample_period!r}')
        self._times[self._head] = t
        self._values[self._head] = value
        self._head = (self._head + 1) % self._capacity
        self._size = min(self._size + 1, self._capacity)

    def clear(self) -> None:
        self._head = 0
        self._size = 0

    def samples(self) -> Tuple[np.ndarray, np.ndarray]:
        """Copies of all held ``(times, values)``, oldest first."""
        return self._take(np.arange(self._size))

    def window(self, t: float, steps: int) -> Tuple[np.ndarray, np.ndarray]:
        """The ``steps + 1`` samples covering ``[t - steps*h, t]``, oldest first."""
        if not self._size:
            raise ClObserverInsufficientHistoryError('buffer is empty')
        end = int(round((t - self.oldest_time) / self._sample_period))
        start = end - steps
        if start < 0 or end >= self._size:
            raise ClObserverInsufficientHistoryError(
                f'window [{t - steps * self._sample_period:.6g}, {t:.6g}] is not covered by '
                f'buffered samples [{self.oldest_time:.6g}, {self.latest_time:.6g}]')
        times, values = self._take(np.arange(start, end + 1))
        if abs(times[-1] - t) > LOOKUP_TOLERANCE:
            raise ClObserverTimeGridError(f'time {t!r} is not on the sampling grid')
        return times, values

    def _take(self, positions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        slots = (self._head - self._size + positions) % self._capacity
        return self._times[slots], self._values[slots]

    def _require_samples(self) -> None:
        if not self._size:
            raise ClObserverInsufficientHistoryError('buffer is empty')


class Triplet(NamedTuple):
    """One candidate ``(P, F_hat, G_hat)`` for the history stack."""

    P: np.ndarray
    F_hat: np.ndarray
    G_hat: np.ndarray


def window_position_delta(buf: SignalBuffer, t: float, cfg: WindowConfig) -> np.ndarray:
    """``p(t-tau2-tau1) - p(t-tau1) + p(t) - p(t-tau2)``, or zero before the windows fill."""
    if not cfg.ready(t):
        return np.zeros(buf.value_shape)
    _, p = buf.window(t, cfg.span_steps)
    return p[0] - p[cfg.tau2_steps] + p[-1] - p[cfg.tau1_steps]


def double_integral(buf: SignalBuffer, t: float, cfg: WindowConfig) -> np.ndarray:
    """Double integral of the buffered integrand over the two windows.

    The inner integral over ``[lambda - tau1, lambda]`` is evaluated at every
    outer node ``lambda`` in ``[t - tau2, t]`` as a difference of one running
    sum; the outer integral then runs over those nodes. With the trapezoid
    rule both levels are trapezoidal. With the ``'euler'`` rule both are left
    rectangle sums, so the latest sample never contributes and
    ``p_k - p_{k-n2} - p_{k-n1} + p_{k-n1-n2}`` of an Euler-integrated
    position equals the result to rounding. Works for any sample shape.
    """
    if not cfg.ready(t):
        return np.zeros(buf.value_shape)
    _, f = buf.window(t, cfg.span_steps)
    h = cfg.sample_period
    n1 = cfg.tau1_steps
    if cfg.quadrature == QUADRATURE_EULER:
        running = h * np.concatenate((np.zeros((1,) + f.shape[1:]), np.cumsum(f[:-1], axis=0)))
        inner = running[n1:] - running[:running.shape[0] - n1]
        return h * np.sum(inner[:-1], axis=0)
    running = scipy.integrate.cumulative_trapezoid(f, dx=h, axis=0, initial=0)
    inner = running[n1:] - running[:running.shape[0] - n1]
    return scipy.integrate.trapezoid(inner, dx=h, axis=0)


def compute_triplet(p_buf: SignalBuffer, regressor_buf: SignalBuffer, f0_buf: SignalBuffer,
                    t: float, cfg: WindowConfig) -> Triplet:
    """``(P(t), F_hat(t), G_hat(t))`` from time-aligned buffers.

    All three are zero together before ``start_time + tau1 + tau2``.
    """
    return Triplet(
        window_position_delta(p_buf, t, cfg),
        double_integral(f0_buf, t, cfg),
        double_integral(regressor_buf, t, cfg),
    )


class TripletRecorder:
    """The three aligned buffers behind :func:`compute_triplet`.

    The simulation feeds it the measured position and the nominal model
    evaluated at the estimated state. Feeding the true state instead turns
    ``F_hat``/``G_hat`` into the exact-state integrals, which tests use as an
    oracle.
    """

    def __init__(self, cfg: WindowConfig, n: int, p: int, regressor_cols: int = None):
        self._cfg = cfg
        cols = n if regressor_cols is None else regressor_cols
        self._positions = SignalBuffer.for_window(cfg, (n,))
        self._known = SignalBuffer.for_window(cfg, (n,))
        self._regressors = SignalBuffer.for_window(cfg, (p, cols))

    @property
    def config(self) -> WindowConfig:
        return self._cfg

    def record(self, t: float, position, known, regressor) -> None:
        self._positions.append(t, position)
        self._known.append(t, known)
        self._regressors.append(t, regressor)

    def triplet(self, t: float) -> Triplet:
        return compute_triplet(self._positions, self._regressors, self._known, t, self._cfg)


def grid_steps(duration: float, sample_period: float, name: str) -> int:
    steps = int(round(duration / sample_period))
    if steps < 1 or abs(steps * sample_period - duration) > LOOKUP_TOLERANCE * max(1.0, duration):
        raise ClObserverConfigError(
            f'{name}={duration!r} is not a positive integer multiple of the sample period {sample_period!r}')
    return steps
