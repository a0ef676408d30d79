"""Diffusion-model mathematics: samplers, score matching, SDEs and Fokker-Planck solvers."""

from ._core import *  # noqa: F401,F403
from ._core import NumericError, __doc__  # noqa: F401

__version__ = "0.1.0"
