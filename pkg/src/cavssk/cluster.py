"""Two-cluster ensemble Hartree-Fock energetics and the occupation minimizer.

The occupation fraction ``eps`` moves electrons from the lower (m) cluster to
the degenerate upper (p) cluster. The total objective adds the SSK free energy
of the correlated manifold to the quadratic EHF cluster energy.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError
from .thermo import Phase, SskParams, classify_phase, free_energy

__all__ = [
    "ClusterEnergies",
    "MinimizationResult",
    "PRESETS",
    "curvature",
    "delta_e",
    "ehf_energy",
    "minimize_occupation",
    "scan_minimize",
    "total_energy_of_eps",
]

SCAN_POINTS = 1024
REFINE_TOL = 1e-10
PROBE_POINTS = 64


@dataclass(frozen=True)
class ClusterEnergies:
    """One- and two-electron parameters of the lower (m) and upper (p) clusters.

    Attributes
    ----------
    eps_m, eps_p : float
        Orbital energies of the lower and upper cluster.
    e1_m, e1_p : float
        Intra-cluster Hartree-exchange terms.
    e_mp : float
        Inter-cluster Hartree-exchange term.
    n_electrons : int
        ``N`` in the ``2N`` prefactor.
    """

    eps_m: float
    eps_p: float
    e1_m: float = 0.0
    e1_p: float = 0.0
    e_mp: float = 0.0
    n_electrons: int = 1

    def __post_init__(self):
        if int(self.n_electrons) != self.n_electrons or self.n_electrons < 1:
            raise DomainError(f"n_electrons must be a positive integer, got {self.n_electrons}")

    @property
    def two_electron_scale(self):
        return max(abs(self.e1_m), abs(self.e1_p), abs(self.e_mp))


PRESETS = {
    # bound chemical states: negative Hartree-exchange terms
    "bound-example": ClusterEnergies(-1.0, -0.5, -0.2, -0.1, -0.3, 10),
    "bare-gap": ClusterEnergies(0.0, 0.5, 0.0, 0.0, 0.0, 10),
}


@dataclass
class MinimizationResult:
    eps_min: float
    energy: float
    phase: Phase
    curvature_sign: int
    scan_trace: Optional[list] = None
    diagnostics: list = field(default_factory=list)


def _check_eps(eps, open_interval=False):
    if open_interval:
        if not 0.0 < eps < 1.0:
            raise DomainError(f"eps must lie in (0, 1), got {eps}")
    elif not 0.0 <= eps <= 1.0:
        raise DomainError(f"eps must lie in [0, 1], got {eps}")


def ehf_energy(eps, c):
    """Quadratic EHF energy of the two-cluster ensemble at occupation ``eps``."""
    _check_eps(eps)
    q = 1.0 - eps
    return 2.0 * c.n_electrons * (
        q * c.eps_m + q * q * c.e1_m + eps * c.eps_p + eps * eps * c.e1_p + q * eps * c.e_mp
    )


def delta_e(c):
    """Excitation energy ``E(eps=1) - E(eps=0)`` including two-electron terms."""
    return ehf_energy(1.0, c) - ehf_energy(0.0, c)


def total_energy_of_eps(eps, theta, c, sigma, n_deg):
    """EHF energy plus the SSK free energy of the correlated fraction."""
    if not theta > 0:
        raise DomainError(f"theta must be > 0, got {theta}")
    return ehf_energy(eps, c) + free_energy(theta, SskParams(sigma, eps, n_deg))


def curvature(eps, theta, c, sigma, n_deg):
    """Second derivative of :func:`total_energy_of_eps` with respect to ``eps``.

    The EHF part contributes ``4N (e1_m + e1_p - e_mp)``; the free energy
    contributes ``-n sigma^2 / (2 theta)`` above the branch seam and
    ``-n theta / (2 eps^2)`` below it.
    """
    _check_eps(eps, open_interval=True)
    if not theta > 0:
        raise DomainError(f"theta must be > 0, got {theta}")
    ehf = 4.0 * c.n_electrons * (c.e1_m + c.e1_p - c.e_mp)
    if theta >= eps * sigma:
        ssk = n_deg * sigma * sigma / (2.0 * theta)
    else:
        ssk = n_deg * theta / (2.0 * eps * eps)
    return ehf - ssk


def _probe_points(theta, sigma):
    pts = (np.arange(PROBE_POINTS) + 0.5) / PROBE_POINTS
    if sigma > 0:
        seam = theta / sigma
        pts = pts[np.abs(pts - seam) > 1e-6]
    return pts


def scan_minimize(theta, c, sigma, n_deg, n_points=SCAN_POINTS, tol=REFINE_TOL):
    """Certified global minimizer of the 1-D objective on ``[0, 1]``.

    A dense scan including both endpoints locates the best grid point; when it
    is interior, a bounded scalar search refines it within the neighbouring
    cells. Ties resolve to the smaller ``eps``.

    Returns
    -------
    eps_min, energy, trace
    """
    grid = np.linspace(0.0, 1.0, n_points)
    values = np.array([total_energy_of_eps(e, theta, c, sigma, n_deg) for e in grid])
    k = int(np.argmin(values))
    eps_min, e_min = float(grid[k]), float(values[k])
    if 0 < k < n_points - 1:
        lo, hi = grid[k - 1], grid[k + 1]
        res = minimize_scalar(
            lambda e: total_energy_of_eps(e, theta, c, sigma, n_deg),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": tol},
        )
        if res.fun < e_min:
            eps_min, e_min = float(res.x), float(res.fun)
    trace = list(zip(grid.tolist(), values.tolist()))
    return eps_min, e_min, trace


def _phase_of(eps_min, theta, sigma):
    if eps_min == 0.0:
        return Phase.UNCORRELATED
    if theta > eps_min * sigma:
        return Phase.PARACORRELATED
    return Phase.SPIN_GLASS_CORRELATED


def minimize_occupation(theta, c, sigma, n_deg, keep_trace=False):
    """Minimize the total energy over the occupation fraction.

    When the objective is concave on every interior probe point the minimum
    sits at an endpoint and only ``eps = 0`` and ``eps = 1`` are compared
    (ties go to ``eps = 0``). Otherwise a dense scan with local refinement is
    used.
    """
    if not theta > 0:
        raise DomainError(f"theta must be > 0, got {theta}")
    diagnostics = []
    de = delta_e(c)
    if not de > 0:
        diagnostics.append(
            f"degenerate ordering: upper cluster not above lower (delta_e = {de!r})"
        )
    probes = [curvature(e, theta, c, sigma, n_deg) for e in _probe_points(theta, sigma)]
    concave = all(k < 0 for k in probes)
    curvature_sign = -1 if concave else (1 if all(k > 0 for k in probes) else 0)
    trace = None
    if concave:
        e0 = total_energy_of_eps(0.0, theta, c, sigma, n_deg)
        e1 = total_energy_of_eps(1.0, theta, c, sigma, n_deg)
        eps_min, energy = (1.0, e1) if e1 < e0 else (0.0, e0)
        if keep_trace:
            trace = [(0.0, e0), (1.0, e1)]
    else:
        eps_min, energy, full = scan_minimize(theta, c, sigma, n_deg)
        if keep_trace:
            trace = full
    if de > 0 and eps_min in (0.0, 1.0):
        phase = classify_phase(theta, sigma, n_deg, de)
        if (phase is Phase.UNCORRELATED) != (eps_min == 0.0):
            diagnostics.append("endpoint choice disagrees with the phase criterion")
            phase = _phase_of(eps_min, theta, sigma)
    else:
        phase = _phase_of(eps_min, theta, sigma)
    return MinimizationResult(eps_min, energy, phase, curvature_sign, trace, diagnostics)
