"""History stacks of recorded ``(P_i, F_hat_i, G_hat_i)`` data points.

A stack keeps its Gram matrix ``sum_i G_hat_i G_hat_i^T`` up to date
incrementally. Once full, a candidate only replaces a stored point if that
raises the minimum singular value of the Gram matrix by more than a factor
``1 + zeta`` (singular value maximisation).

:class:`PurgeController` runs two stacks: the main stack used by the
parameter estimator and a transient stack that records fresh data. When the
transient stack is full rank, at least ``xi`` times as rich as the best stack
seen so far, and the dwell time has passed since the last purge, it replaces
the main stack and recording starts over.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from .errors import ClObserverConfigError, ClObserverShapeError
from .numerics import as_matrix, as_vector, min_singular_value, min_singular_values
from .windows import Triplet

__all__ = [
    'DataPoint',
    'HistoryStack',
    'HistoryEvent',
    'PurgePolicy',
    'PurgeController',
    'try_insert',
    'is_full_rank',
    'purge_tick',
]

logger = logging.getLogger(__name__)

TIME_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class DataPoint:
    """One recorded triple; ``G_hat`` is ``p x n`` (or ``p x 1`` for a vector basis)."""

    P: np.ndarray
    F_hat: np.ndarray
    G_hat: np.ndarray
    recorded_at: float = 0.0

    def __post_init__(self):
        P = as_vector(self.P, name='P')
        F_hat = as_vector(self.F_hat, P.shape[0], 'F_hat')
        G_hat = as_matrix(self.G_hat, name='G_hat')
        if G_hat.shape[1] not in (P.shape[0], 1):
            raise ClObserverShapeError(
                f'G_hat shape {G_hat.shape} does not match P of length {P.shape[0]}')
        for name, value in (('P', P), ('F_hat', F_hat), ('G_hat', G_hat)):
            value = value.copy()
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def from_triplet(cls, triplet: Triplet, recorded_at: float) -> 'DataPoint':
        return cls(triplet.P, triplet.F_hat, triplet.G_hat, recorded_at)

    @property
    def parameters(self) -> int:
        return self.G_hat.shape[0]


class HistoryStack:
    """Up to ``capacity`` data points plus their cached Gram matrix.

    Stacks are values: insertion returns a new stack.
    """

    def __init__(self, capacity: int, parameters: int, points: Tuple[DataPoint, ...] = (),
                 gram: Optional[np.ndarray] = None, smin: Optional[float] = None):
        if capacity < 1:
            raise ClObserverConfigError(f'stack capacity must be at least 1, got {capacity}')
        if len(points) > capacity:
            raise ClObserverShapeError(f'{len(points)} points exceed capacity {capacity}')
        if points:
            _check_compatible(points[0], parameters, points[1:])
        self._capacity = int(capacity)
        self._parameters = int(parameters)
        self._points = tuple(points)
        if gram is None:
            gram = _gram_of(self._points, self._parameters)
        gram.setflags(write=False)
        self._gram = gram
        if smin is not None:
            self.__dict__['smin'] = float(smin)

    @classmethod
    def empty(cls, capacity: int, parameters: int) -> 'HistoryStack':
        return cls(capacity, parameters)

    @classmethod
    def zero_filled(cls, capacity: int, parameters: int, n: int, regressor_cols: int = None) -> 'HistoryStack':
        """A full stack whose entries are all zero."""
        cols = n if regressor_cols is None else regressor_cols
        zero = DataPoint(np.zeros(n), np.zeros(n), np.zeros((parameters, cols)))
        return cls(capacity, parameters, (zero,) * capacity)

    @classmethod
    def synthetic_full_rank(cls, capacity: int, parameters: int, n: int, scale: float,
                            regressor_cols: int = None) -> 'HistoryStack':
        """``parameters`` points with ``P = F_hat = 0`` and Gram matrix ``scale * I``."""
        if capacity < parameters:
            raise ClObserverConfigError(
                f'a full-rank stack of {parameters} parameters needs capacity >= {parameters}')
        if not scale > 0:
            raise ClObserverConfigError(f'scale must be positive, got {scale}')
        cols = n if regressor_cols is None else regressor_cols
        points = []
        for i in range(parameters):
            G_hat = np.zeros((parameters, cols))
            G_hat[i, 0] = np.sqrt(scale)
            points.append(DataPoint(np.zeros(n), np.zeros(n), G_hat))
        return cls(capacity, parameters, tuple(points))

    @property
    def capacity(self) -> int:
        return self._capacity

    @property
    def parameters(self) -> int:
        return self._parameters

    @property
    def points(self) -> Tuple[DataPoint, ...]:
        return self._points

    @property
    def gram(self) -> np.ndarray:
        return self._gram

    def __len__(self) -> int:
        return len(self._points)

    @property
    def is_full(self) -> bool:
        return len(self._points) >= self._capacity

    @cached_property
    def smin(self) -> float:
        """Minimum singular value of the Gram matrix."""
        return min_singular_value(self._gram)

    @cached_property
    def regressors(self) -> np.ndarray:
        """All ``G_hat_i`` stacked, ``(M, p, r)``."""
        if not self._points:
            return np.zeros((0, self._parameters, 1))
        return np.stack([point.G_hat for point in self._points])

    @cached_property
    def targets(self) -> np.ndarray:
        """All ``P_i - F_hat_i`` stacked, ``(M, n)``."""
        if not self._points:
            return np.zeros((0, 1))
        return np.stack([point.P - point.F_hat for point in self._points])

    @cached_property
    def moment(self) -> np.ndarray:
        """``sum_i G_hat_i (P_i - F_hat_i)`` shaped like the parameter matrix."""
        if not self._points:
            return np.zeros((self._parameters, 1))
        m, n = self.targets.shape
        rows = self.regressors.shape[2]
        targets = self.targets.reshape(m, rows, n // rows)
        return np.einsum('mpr,mrc->pc', self.regressors, targets)

    def recompute_gram(self) -> np.ndarray:
        return _gram_of(self._points, self._parameters)

    def cleared(self) -> 'HistoryStack':
        return HistoryStack(self._capacity, self._parameters)


class _Insertion(NamedTuple):
    stack: HistoryStack
    accepted: bool
    kind: str
    slot: int
    smin_before: float
    smin_after: float


def try_insert(stack: HistoryStack, candidate: DataPoint, zeta: float) -> Tuple[HistoryStack, bool]:
    """Offers ``candidate`` to ``stack``.

    A stack with room appends unconditionally. A full stack replaces slot
    ``j`` only if ``smin(gram - G_j G_j^T + G* G*^T) > (1 + zeta) * smin(gram)``;
    among passing slots the one with the largest resulting ``smin`` wins, the
    lowest index on ties. Returns the new stack and whether it changed.
    """
    outcome = _insert(stack, candidate, zeta)
    return outcome.stack, outcome.accepted


def is_full_rank(stack: HistoryStack, c_lower: float) -> bool:
    """True iff ``smin(gram) > c_lower``."""
    if not c_lower > 0:
        raise ClObserverConfigError(f'c_lower must be positive, got {c_lower}')
    return stack.smin > c_lower


def _insert(stack: HistoryStack, candidate: DataPoint, zeta: float) -> _Insertion:
    if zeta < 0:
        raise ClObserverConfigError(f'zeta must be non-negative, got {zeta}')
    if stack.points:
        _check_compatible(stack.points[0], stack.parameters, (candidate,))
    elif candidate.parameters != stack.parameters:
        raise ClObserverShapeError(
            f'candidate has {candidate.parameters} parameters, stack expects {stack.parameters}')

    before = stack.smin
    outer = _outer(candidate.G_hat)
    if not stack.is_full:
        grown = HistoryStack(stack.capacity, stack.parameters, stack.points + (candidate,),
                             _symmetric(stack.gram + outer))
        return _Insertion(grown, True, 'append', len(stack), before, grown.smin)

    regressors = stack.regressors
    replaced = stack.gram[np.newaxis] - np.einsum('mpr,mqr->mpq', regressors, regressors) + outer
    scores = min_singular_values(replaced)
    passing = before < scores / (1.0 + zeta)
    if not np.any(passing):
        return _Insertion(stack, False, 'reject', -1, before, before)
    slot = int(np.argmax(np.where(passing, scores, -np.inf)))
    points = stack.points[:slot] + (candidate,) + stack.points[slot + 1:]
    swapped = HistoryStack(stack.capacity, stack.parameters, points,
                           _symmetric(replaced[slot]), smin=scores[slot])
    return _Insertion(swapped, True, 'replace', slot, before, float(scores[slot]))


@dataclass(frozen=True)
class HistoryEvent:
    time: float
    kind: str
    detail: str


@dataclass(frozen=True)
class PurgePolicy:
    """Constants of the purging rule.

    ``window_deadtime`` is ``tau1 + tau2``: data offered that soon after a
    purge still straddles it and is ignored.
    """

    dwell_time: float
    xi: float
    zeta: float
    window_deadtime: float
    c_lower: float

    def __post_init__(self):
        if not 0 < self.xi <= 1:
            raise ClObserverConfigError(f'xi must lie in (0, 1], got {self.xi}')
        if self.zeta < 0:
            raise ClObserverConfigError(f'zeta must be non-negative, got {self.zeta}')
        if self.dwell_time < 0 or self.window_deadtime < 0:
            raise ClObserverConfigError('dwell time and window dead time must be non-negative')
        if not self.c_lower > 0:
            raise ClObserverConfigError(f'c_lower must be positive, got {self.c_lower}')


@dataclass(frozen=True, eq=False)
class PurgeController:
    """Main and transient stacks plus the purge bookkeeping.

    ``best_smin`` is the richest transient stack swapped in so far and
    ``last_purge_time`` the time of the latest swap (``start_time`` before any).
    """

    main: HistoryStack
    transient: HistoryStack
    policy: PurgePolicy
    last_purge_time: float = 0.0
    best_smin: float = 0.0
    purge_count: int = 0

    @classmethod
    def start(cls, main: HistoryStack, policy: PurgePolicy, start_time: float = 0.0,
              transient_capacity: int = None) -> 'PurgeController':
        capacity = main.capacity if transient_capacity is None else transient_capacity
        return cls(main, HistoryStack.empty(capacity, main.parameters), policy, start_time)


def purge_tick(ctrl: PurgeController, t: float, candidate: Optional[DataPoint] = None, *,
               on_event: Callable[[HistoryEvent], None] = None) -> Tuple[PurgeController, bool]:
    """Runs the purge algorithm for one time instant.

    ``on_event`` receives one :class:`HistoryEvent` per decision taken.
    Returns the updated controller and whether the main stack was replaced.
    """
    if candidate is None:
        return ctrl, False
    policy = ctrl.policy

    def emit(kind, detail):
        event = HistoryEvent(t, kind, detail)
        logger.debug('t=%r %s %s', t, kind, detail)
        if on_event is not None:
            on_event(event)

    if not t > ctrl.last_purge_time + policy.window_deadtime + TIME_TOLERANCE:
        emit('ignore', f'last_purge={ctrl.last_purge_time!r}')
        return ctrl, False

    outcome = _insert(ctrl.transient, candidate, policy.zeta)
    emit(outcome.kind, f'slot={outcome.slot} size={len(outcome.stack)} '
                       f'smin_before={outcome.smin_before!r} smin_after={outcome.smin_after!r}')
    ctrl = replace(ctrl, transient=outcome.stack)

    smin = ctrl.transient.smin
    if (smin >= policy.xi * ctrl.best_smin
            and is_full_rank(ctrl.transient, policy.c_lower)
            and t - ctrl.last_purge_time >= policy.dwell_time - TIME_TOLERANCE):
        emit('purge', f'smin_old={ctrl.main.smin!r} smin_new={smin!r} '
                      f'best_smin={max(ctrl.best_smin, smin)!r}')
        logger.info('purged history stack at t=%.4f (smin %.4g -> %.4g, purge #%d)',
                    t, ctrl.main.smin, smin, ctrl.purge_count + 1)
        return replace(ctrl,
                       main=ctrl.transient,
                       transient=ctrl.transient.cleared(),
                       last_purge_time=t,
                       best_smin=max(ctrl.best_smin, smin),
                       purge_count=ctrl.purge_count + 1), True
    return ctrl, False


def _outer(G_hat: np.ndarray) -> np.ndarray:
    return _symmetric(G_hat @ G_hat.T)


def _symmetric(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _gram_of(points: Tuple[DataPoint, ...], parameters: int) -> np.ndarray:
    gram = np.zeros((parameters, parameters))
    for point in points:
        gram += point.G_hat @ point.G_hat.T
    return _symmetric(gram)


def _check_compatible(reference: DataPoint, parameters: int, others) -> None:
    if reference.parameters != parameters:
        raise ClObserverShapeError(
            f'data point has {reference.parameters} parameters, stack expects {parameters}')
    for point in others:
        if point.G_hat.shape != reference.G_hat.shape or point.P.shape != reference.P.shape:
            raise ClObserverShapeError(
                f'data point shapes G_hat={point.G_hat.shape}, P={point.P.shape} do not match '
                f'G_hat={reference.G_hat.shape}, P={reference.P.shape}')
