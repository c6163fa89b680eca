"""Falcon - calculus on Cantor-like fractal sets."""

__version__ = "0.1.0"

from .core import VerificationRunner
from .etp import Profile
from .exceptions import FalconError
from .models import CantorSetSpec, EngineConfig, InitialConditions, ProblemSpec
from .solver import ConstCoeffFDE, LinearFDE, general_solution, solve_ivp
from .staircase import StaircaseEvaluator

__all__ = [
    "CantorSetSpec",
    "ConstCoeffFDE",
    "EngineConfig",
    "FalconError",
    "InitialConditions",
    "LinearFDE",
    "ProblemSpec",
    "Profile",
    "StaircaseEvaluator",
    "VerificationRunner",
    "general_solution",
    "solve_ivp",
    "__version__",
]
