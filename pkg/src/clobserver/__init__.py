"""Concurrent-learning velocity observer and parameter estimator for second-order systems."""

__version__ = '0.1.0'

from .errors import *
from . import numerics, windows, observer, history, estimator, plants, config, runlog, simulation
from .plants import manipulator, control, noise
from .config import RunConfig
from .simulation import run
