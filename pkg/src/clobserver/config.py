"""Run configuration.

A run is described by flat ``key = value`` lines with ``#`` comments, read as
TOML. Every key has a default; the defaults reproduce the noise-free run and
:meth:`RunConfig.noisy` the noisy one.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union, get_type_hints

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ClObserverConfigError
from .estimator import EstimatorGains
from .history import PurgePolicy
from .observer import ObserverGains
from .plants.control import ControllerGains
from .plants.noise import NoiseModel
from .windows import QUADRATURE_EULER, WindowConfig, grid_steps

__all__ = ['RunConfig']


@dataclass(frozen=True)
class RunConfig:
    tau1: float = 0.5
    tau2: float = 0.3
    stack_capacity: int = 50
    gamma0_scale: float = 1.0
    beta1: float = 0.5
    alpha: float = 10.0
    k: float = 10.0
    beta: float = 2.0
    zeta: float = 0.0
    xi: float = 0.95
    k_theta: Optional[float] = None
    dwell_time: Optional[float] = None
    candidate_period: float = 0.05
    sample_period: float = 5e-4
    duration: float = 30.0
    noise_variance: float = 0.0
    seed: int = 0
    init_stack_full_rank: bool = False
    gamma_reset_on_purge: bool = False
    start_time: float = 0.0
    c_lower: float = 1e-4
    decimation: int = 10
    gamma_min: Optional[float] = None
    gamma_max: Optional[float] = None
    controller_kp: float = 100.0
    controller_kd: float = 20.0
    init_stack_scale: float = 1e-2
    quadrature: str = QUADRATURE_EULER

    def __post_init__(self):
        for field in dataclasses.fields(self):
            _check_type(field.name, getattr(self, field.name), _HINTS[field.name])
        if not self.sample_period > 0:
            raise ClObserverConfigError(f'sample_period must be positive, got {self.sample_period}')
        if self.duration < 0:
            raise ClObserverConfigError(f'duration must be non-negative, got {self.duration}')
        if self.stack_capacity < 1:
            raise ClObserverConfigError(f'stack_capacity must be at least 1, got {self.stack_capacity}')
        if self.decimation < 1:
            raise ClObserverConfigError(f'decimation must be at least 1, got {self.decimation}')
        if self.seed < 0:
            raise ClObserverConfigError(f'seed must be non-negative, got {self.seed}')
        if not self.gamma0_scale > 0:
            raise ClObserverConfigError(f'gamma0_scale must be positive, got {self.gamma0_scale}')
        if not self.init_stack_scale > 0:
            raise ClObserverConfigError(f'init_stack_scale must be positive, got {self.init_stack_scale}')
        if self.dwell_time is not None and self.dwell_time < 0:
            raise ClObserverConfigError(f'dwell_time must be non-negative, got {self.dwell_time}')
        grid_steps(self.candidate_period, self.sample_period, 'candidate_period')
        self.window_config()
        self.observer_gains()
        self.estimator_gains()
        self.purge_policy()
        self.controller_gains()
        NoiseModel(self.noise_variance, self.seed)

    @classmethod
    def noise_free(cls, **fields) -> 'RunConfig':
        return cls(**fields)

    @classmethod
    def noisy(cls, **fields) -> 'RunConfig':
        values = dict(tau1=0.9, tau2=0.5, stack_capacity=150, noise_variance=0.001)
        values.update(fields)
        return cls(**values)

    @classmethod
    def from_toml(cls, text: str) -> 'RunConfig':
        """Parses ``key = value`` lines; unknown keys and mistyped values are errors."""
        try:
            values = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            raise ClObserverConfigError(f'malformed config: {e}') from e
        return cls(**_checked_fields(values))

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> 'RunConfig':
        try:
            text = Path(path).read_text(encoding='utf-8')
        except OSError as e:
            raise ClObserverConfigError(f'cannot read config {path}: {e}') from e
        return cls.from_toml(text)

    def as_toml(self) -> str:
        """The configuration echo; unset optional keys are left out."""
        lines = []
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if value is not None:
                lines.append(f'{field.name} = {_format(value)}')
        return '\n'.join(lines) + '\n'

    def replace(self, **fields) -> 'RunConfig':
        return dataclasses.replace(self, **_checked_fields(fields))

    def with_overrides(self, overrides: Iterable[str]) -> 'RunConfig':
        """Applies ``KEY=VALUE`` strings, each value written as in the config file."""
        values = {}
        for override in overrides:
            key, sep, value = override.partition('=')
            if not sep or not key.strip():
                raise ClObserverConfigError(f'override {override!r} is not KEY=VALUE')
            try:
                values.update(tomllib.loads(f'{key.strip()} = {value.strip()}'))
            except tomllib.TOMLDecodeError as e:
                raise ClObserverConfigError(f'malformed override {override!r}: {e}') from e
        return self.replace(**values)

    @property
    def effective_k_theta(self) -> float:
        """``k_theta``, or ``0.5 / stack_capacity`` when unset."""
        return 0.5 / self.stack_capacity if self.k_theta is None else self.k_theta

    @property
    def effective_dwell_time(self) -> float:
        """``dwell_time``, or ``2 (tau1 + tau2)`` when unset."""
        return 2.0 * (self.tau1 + self.tau2) if self.dwell_time is None else self.dwell_time

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.sample_period))

    @property
    def candidate_steps(self) -> int:
        return grid_steps(self.candidate_period, self.sample_period, 'candidate_period')

    def window_config(self) -> WindowConfig:
        return WindowConfig(self.tau1, self.tau2, self.sample_period, self.start_time, self.quadrature)

    def observer_gains(self) -> ObserverGains:
        return ObserverGains(self.alpha, self.k, self.beta)

    def estimator_gains(self) -> EstimatorGains:
        return EstimatorGains(self.effective_k_theta, self.beta1, self.gamma_min, self.gamma_max)

    def purge_policy(self) -> PurgePolicy:
        return PurgePolicy(dwell_time=self.effective_dwell_time, xi=self.xi, zeta=self.zeta,
                           window_deadtime=self.tau1 + self.tau2, c_lower=self.c_lower)

    def controller_gains(self) -> ControllerGains:
        return ControllerGains(self.controller_kp, self.controller_kd)

    def noise_model(self) -> NoiseModel:
        return NoiseModel(self.noise_variance, self.seed)


_HINTS = get_type_hints(RunConfig)


def _checked_fields(values: dict) -> dict:
    known = {field.name for field in dataclasses.fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ClObserverConfigError(f'unknown config keys: {", ".join(unknown)}')
    return {name: _coerce(name, value) for name, value in values.items()}


def _coerce(name: str, value):
    hint = _HINTS[name]
    if value is None:
        return value
    if hint in (float, Optional[float]) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def _check_type(name: str, value, hint) -> None:
    if value is None:
        if hint != Optional[float]:
            raise ClObserverConfigError(f'{name} must be set')
        return
    if hint is bool:
        ok = isinstance(value, bool)
    elif hint is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif hint is str:
        ok = isinstance(value, str)
    else:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
    if not ok:
        raise ClObserverConfigError(f'{name} has the wrong type: {value!r}')


def _format(value) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return f'"{value}"'
    return repr(float(value))
