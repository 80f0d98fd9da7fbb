"""Spherical SK toolkit for cavity-mediated collective electron correlation phases."""

from .errors import ConfigError, DomainError, NumericalError
from .thermo import (
    Phase,
    SskParams,
    classify_phase,
    critical_theta,
    free_energy,
    ssk_entropy,
    total_ensemble_energy,
)
from .couplings import (
    CouplingMatrix,
    EnsembleSpec,
    estimate_sigma,
    sample_dipole_couplings,
    sample_goe_couplings,
)
from .cluster import (
    ClusterEnergies,
    MinimizationResult,
    curvature,
    ehf_energy,
    minimize_occupation,
    total_energy_of_eps,
)
from .finite_n import (
    AgingTrace,
    McEstimate,
    SpinConfiguration,
    free_energy_mc,
    free_energy_saddle,
    ground_state_energy,
    overlap_statistic,
    relax_and_age,
    thermal_sample,
)

__version__ = "0.1.0"
