"""Kinetic relaxation toward Fermi-Dirac equilibria: solver, norms and verification checks."""

from ._bdbkit import (
    BandParams,
    BdbError,
    EntropyParams,
    ModelParams,
    PhaseGrid,
    PhysicalParams,
    __version__,
    analytic_seminorm,
    band_energy,
    criticality,
    decay_fit,
    equilibrium,
    equilibrium_of_energy,
    evolve,
    group_action,
    kinetic_constants,
    penrose_margin,
    read_snapshot,
    set_threads,
    verification_battery,
    write_snapshot,
    x_norm,
)

__all__ = [
    "BandParams",
    "BdbError",
    "EntropyParams",
    "ModelParams",
    "PhaseGrid",
    "PhysicalParams",
    "__version__",
    "analytic_seminorm",
    "band_energy",
    "criticality",
    "decay_fit",
    "equilibrium",
    "equilibrium_of_energy",
    "evolve",
    "group_action",
    "kinetic_constants",
    "penrose_margin",
    "read_snapshot",
    "set_threads",
    "verification_battery",
    "write_snapshot",
    "x_norm",
]
