"""Boundary layers and rarefaction waves of the isentropic Navier-Stokes inflow problem.

Submodules
----------
gas             gas law, characteristic speeds, phase-plane classification
boundary_layer  stationary profiles, decay fits and profile checks
rarefaction     smoothed rarefaction background built on an exact Burgers flow
solver          explicit finite-difference solver in the moving frame
diagnostics     energy functionals, Kanel bracket and per-snapshot audits
conditions      index-condition checkers and the scaled perturbation family
config, runner, cli
                run configuration, orchestration and the command line
"""
from .gas import (AsymptoticCase, CaseKind, DomainError, EndState, GasModel, PhaseRegion,
                  classify_asymptotic, classify_state, sonic_point)

__version__ = "0.1.0"

__all__ = ["AsymptoticCase", "CaseKind", "DomainError", "EndState", "GasModel",
           "PhaseRegion", "classify_asymptotic", "classify_state", "sonic_point"]
