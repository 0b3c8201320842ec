"""Fourier pseudo-spectral Cahn-Hilliard-Navier-Stokes solver with
fully decoupled, energy-stable IMEX BDF-k / generalized SAV time stepping."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ChnsError,
    CompatibilityError,
    ConfigError,
    OrderError,
    ParseError,
    StateError,
    UnknownScenario,
    ValidationError,
)
from .model import ModelParams, energy  # noqa: E402
from .spectral import Grid2, ScalarField, VectorField2  # noqa: E402
from .stepper import SolverState, StepDiagnostics, bdf_scheme, initial_state, step  # noqa: E402

__all__ = [
    "ChnsError",
    "CompatibilityError",
    "ConfigError",
    "OrderError",
    "ParseError",
    "StateError",
    "UnknownScenario",
    "ValidationError",
    "ModelParams",
    "energy",
    "Grid2",
    "ScalarField",
    "VectorField2",
    "SolverState",
    "StepDiagnostics",
    "bdf_scheme",
    "initial_state",
    "step",
]
