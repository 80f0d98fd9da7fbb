"""Closed-form thermodynamics of the spherical SK model of collective correlations.

All temperatures are reduced, ``theta = k_B * T`` in energy units. Free energies
are measured relative to the non-interacting (sigma = 0) reference, so the
uncoupled ensemble has ``F = 0``.
"""

from dataclasses import dataclass
import enum
import math

from .errors import DomainError

__all__ = [
    "Phase",
    "SskParams",
    "classify_phase",
    "critical_theta",
    "free_energy",
    "ssk_entropy",
    "total_ensemble_energy",
]


class Phase(enum.Enum):
    UNCORRELATED = "uncorrelated"
    PARACORRELATED = "paracorrelated"
    SPIN_GLASS_CORRELATED = "spin-glass-correlated"

    @property
    def is_correlated(self):
        return self is not Phase.UNCORRELATED


@dataclass(frozen=True)
class SskParams:
    """Reduced description of the collective correlation problem.

    Attributes
    ----------
    sigma : float
        Fluctuation scale of the random transversal couplings (energy units).
    eps : float
        Occupation fraction transferred to the correlated manifold, in [0, 1].
    n_deg : int
        Number of degenerate occupied-virtual orbital pairs.
    """

    sigma: float
    eps: float = 1.0
    n_deg: int = 1

    def __post_init__(self):
        if not self.sigma >= 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if not 0.0 <= self.eps <= 1.0:
            raise DomainError(f"eps must lie in [0, 1], got {self.eps}")
        if int(self.n_deg) != self.n_deg or self.n_deg < 1:
            raise DomainError(f"n_deg must be a positive integer, got {self.n_deg}")

    @property
    def coupling(self):
        """Effective coupling ``eps * sigma``."""
        return self.eps * self.sigma


def _check_theta(theta):
    if not theta >= 0 or math.isinf(theta):
        raise DomainError(f"theta must be finite and >= 0, got {theta}")


def critical_theta(p):
    """Critical reduced temperature ``theta_c = eps * sigma``."""
    return p.coupling


def free_energy(theta, p):
    """Thermodynamic-limit free energy of the SSK correlation problem.

    Parameters
    ----------
    theta : float
        Reduced temperature, ``>= 0``. ``theta = 0`` returns the ground-state
        limit ``-n_deg * eps * sigma``.
    p : SskParams

    Returns
    -------
    float
        ``-n (eps sigma)^2 / (4 theta)`` on the paramagnetic side
        (``eps sigma <= theta``) and
        ``-n [eps sigma - theta/2 ln(eps sigma/theta) - 3 theta/4]`` below it.
    """
    _check_theta(theta)
    j = p.coupling
    if j == 0.0:
        return 0.0
    if theta == 0.0:
        return -p.n_deg * j
    if j <= theta:
        return -p.n_deg * j * j / (4.0 * theta)
    return -p.n_deg * (j - 0.5 * theta * math.log(j / theta) - 0.75 * theta)


def ssk_entropy(theta, p):
    """Entropy ``-dF/dtheta`` relative to the uniform-sphere reference.

    Raises DomainError at ``theta = 0`` where the glass-branch derivative
    diverges.
    """
    _check_theta(theta)
    if theta == 0.0:
        raise DomainError("entropy is undefined at theta = 0")
    j = p.coupling
    if j == 0.0:
        return 0.0
    if j <= theta:
        return -p.n_deg * j * j / (4.0 * theta * theta)
    return -p.n_deg * (0.5 * math.log(j / theta) + 0.25)


def classify_phase(theta, sigma, n_deg, delta_e):
    """Assign the correlation phase at ``eps = 1``.

    The ensemble stays uncorrelated while ``F(theta, sigma, 1) >= -delta_e``.
    Otherwise it is paracorrelated above ``theta_c = sigma`` and spin-glass
    correlated at or below it.
    """
    if not delta_e > 0:
        raise DomainError(f"delta_e must be > 0, got {delta_e}")
    if not theta > 0:
        raise DomainError(f"theta must be > 0, got {theta}")
    f = free_energy(theta, SskParams(sigma, 1.0, n_deg))
    if f >= -delta_e:
        return Phase.UNCORRELATED
    if theta > sigma:
        return Phase.PARACORRELATED
    return Phase.SPIN_GLASS_CORRELATED


def total_ensemble_energy(theta, sigma, n_deg, delta_e, e_ehf0):
    """Total ensemble energy after the endpoint choice between the two clusters."""
    phase = classify_phase(theta, sigma, n_deg, delta_e)
    if phase is Phase.UNCORRELATED:
        return e_ehf0
    return e_ehf0 + delta_e + free_energy(theta, SskParams(sigma, 1.0, n_deg))
