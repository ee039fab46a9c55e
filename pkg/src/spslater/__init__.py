"""Multi-bump cluster states of the Schrodinger-Poisson-Slater system.

Pipeline: radial ground state -> expansion constants -> 3D bump ansatz and
free-space Poisson coupling -> energy functional with auxiliary-equation
correction -> reduced-energy minimization over admissible bump
configurations and scaling-law extraction.
"""

from . import errors
from .ground_state import (
    RadialProfile,
    RadialTestFunction,
    solve_ground_state,
    fit_decay,
    quadratic_form,
    check_nondegeneracy,
    save_profile,
    load_profile,
)

__all__ = [
    "errors",
    "RadialProfile",
    "RadialTestFunction",
    "solve_ground_state",
    "fit_decay",
    "quadratic_form",
    "check_nondegeneracy",
    "save_profile",
    "load_profile",
]
