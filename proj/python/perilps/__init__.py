"""Meshfree LPS peridynamics solver."""

from ._core import (
    InputError,
    Material,
    Setup,
    build_setup,
    case_names,
    converge,
    fit_rate,
    solve,
    theoretical_rate,
    validate,
)

__all__ = [
    "InputError",
    "Material",
    "Setup",
    "build_setup",
    "case_names",
    "converge",
    "fit_rate",
    "solve",
    "theoretical_rate",
    "validate",
]
