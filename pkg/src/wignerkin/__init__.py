"""Spectral simulator and verification lab for the Boltzmann equation in
density-matrix (Wigner) form with a constant or bounded collision kernel.

Submodules are imported lazily so the command-line entry point can configure
thread counts before numerical libraries load.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "make_grid": "phase_grid",
    "PhaseGrid": "phase_grid",
    "KineticState": "wigner",
    "DensityMatrix": "wigner",
    "wigner_forward": "wigner",
    "wigner_inverse": "wigner",
    "free_flow_dm": "propagator",
    "free_transport_kinetic": "propagator",
    "Constant": "collision",
    "Tabulated": "collision",
    "AngularQuadrature": "collision",
    "collide": "collision",
    "SolverConfig": "solver",
    "solve_duhamel": "solver",
    "solve_splitting": "solver",
    "solve_moment_system_plus": "solver",
    "time_derivative": "solver",
    "SobolevIndex": "functionals",
    "sobolev_norm": "functionals",
    "observables": "functionals",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
