"""Finite-size oracles for the SSK correlation problem.

Configurations live on the sphere ``sum_i s_i^2 = eps`` and carry the Boltzmann
weight ``exp(s.J.s / (2 theta))``, i.e. energy ``-sum_{i<j} J_ij s_i s_j``.
Free energies use the same reference as the closed form: the uniform measure
on the sphere (``J = 0``) has ``F = 0``.

Sampling dynamics
-----------------
Moves act in the eigenbasis ``y = V^T s`` of ``J``, where the weight factorizes
as ``exp(sum_k mu_k y_k^2 / (2 theta))``. One sweep pairs all modes at random, independently for every chain.
On the circle spanned by a pair ``(hi, lo)`` with ``mu_hi >= mu_lo`` and fixed
radius ``rho`` the angle density is von Mises in ``2 phi`` with concentration
``kappa = rho^2 (mu_hi - mu_lo) / (4 theta)``; disjoint pairs are conditionally
independent, so a whole pairing is resampled exactly in one vectorized step.
The circle carries two equal-weight lobes ``y_hi > 0`` and ``y_hi < 0``. A move
stays in the current lobe except with probability ``exp(-2 kappa)``, the
Boltzmann factor of the barrier between them, in which case the lobe is
redrawn. Each component of this mixture preserves the target, and the lobe
rule keeps the dynamics local: a macroscopic condensate cannot flip its sign,
which is what produces glassy freezing and aging below ``theta_c``. Heat-bath
sweeps alternate with over-relaxation sweeps that reflect each pair about its
mode axis (``y_lo -> -y_lo``), which leaves the energy unchanged.
"""

from dataclasses import dataclass
import math
import warnings
from itertools import combinations

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import DomainError, NumericalError
from .rng import stream

__all__ = [
    "AgingTrace",
    "McEstimate",
    "OverlapEstimate",
    "SADDLE_LOGZ_BAND",
    "SpinConfiguration",
    "ThermalObservables",
    "free_energy_mc",
    "free_energy_saddle",
    "ground_state_energy",
    "integrated_autocorr_time",
    "overlap_statistic",
    "relax_and_age",
    "thermal_sample",
]

CONSTRAINT_RTOL = 1e-12
EIG_RTOL = 1e-10
ESS_THRESHOLD = 50.0
# total log-weight variance targeted by the automatic annealing schedule;
# lognormal weights with unit variance keep the ESS near n / e
LOGWEIGHT_VARIANCE = 1.0
# one sweep per stage lags equilibrium; energy autocorrelation times of the
# sampler are ~10 sweeps in the paramagnetic phase
MIXING_FACTOR = 4.0
MAX_STAGES = 1024
# |ln Z_saddle - ln Z_exact| bound for the Gaussian-corrected saddle point;
# the worst case is one dominant mode, where the defect is the Stirling
# remainder ln(2 pi)/2 - 1/2 - ln(2)/2 = 0.0723
SADDLE_LOGZ_BAND = 0.1


@dataclass(frozen=True, eq=False)
class SpinConfiguration:
    """Amplitude vector on the sphere of squared radius ``radius_sq``."""

    values: np.ndarray
    radius_sq: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if abs(v @ v - self.radius_sq) > CONSTRAINT_RTOL * max(self.radius_sq, 1e-300):
            raise DomainError("configuration violates the spherical constraint")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def project(cls, values, radius_sq):
        """Rescale ``values`` onto the sphere."""
        v = np.asarray(values, dtype=float)
        v = v * math.sqrt(radius_sq / (v @ v))
        # one corrective pass absorbs the rounding of the first rescale
        v = v * math.sqrt(radius_sq / (v @ v))
        return cls(v, radius_sq)

    def energy(self, j):
        """Correlation energy ``-sum_{i<j} J_ij s_i s_j``."""
        return -0.5 * float(self.values @ j.entries @ self.values)


def _check_common(theta, eps):
    if not theta > 0 or math.isinf(theta):
        raise DomainError(f"theta must be finite and > 0, got {theta}")
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps must lie in (0, 1], got {eps}")


# -- ground state ----------------------------------------------------------

def ground_state_energy(j, eps=1.0):
    """Exact ground state on the sphere: ``-(eps/2) * lambda_max(J)``.

    Returns
    -------
    energy : float
    config : SpinConfiguration
        ``sqrt(eps)`` times the top eigenvector, signed so that its
        largest-magnitude entry is positive.
    """
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps must lie in (0, 1], got {eps}")
    a = j.entries
    n = j.dim
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        v = np.zeros(n)
        v[0] = 1.0
        return 0.0, SpinConfiguration.project(v, eps)
    w, vec = eigh(a, subset_by_index=[n - 1, n - 1])
    mu, v = float(w[0]), vec[:, 0]
    residual = float(np.linalg.norm(a @ v - mu * v))
    if residual > EIG_RTOL * norm:
        raise NumericalError(
            f"top eigenpair did not converge: residual {residual:.3e} > {EIG_RTOL:.0e} * ||J|| = {EIG_RTOL * norm:.3e}"
        )
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return -0.5 * eps * mu, SpinConfiguration.project(v, eps)


# -- saddle point ----------------------------------------------------------

def _solve_saddle(a, eps):
    """Root ``z > max(a)`` of ``eps = (1/2) sum_k 1/(z - a_k)``, as ``w = z - max(a)``."""
    gap = a.max() - a  # >= 0
    g = lambda w: 0.5 * np.sum(1.0 / (w + gap)) - eps
    lo, hi = 0.5 / eps, 0.5 * a.size / eps
    glo, ghi = g(lo), g(hi)
    if glo < 0 or ghi > 0 or not (np.isfinite(glo) and np.isfinite(ghi)):
        raise NumericalError(
            f"saddle bracket failed: g({lo:.3e}) = {glo:.3e}, g({hi:.3e}) = {ghi:.3e}; "
            f"spectrum range [{a.min():.3e}, {a.max():.3e}], n = {a.size}"
        )
    if ghi == 0.0:
        return hi, gap
    w = brentq(g, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
    return w, gap


def free_energy_saddle(j, theta, eps=1.0, gaussian_correction=True):
    """Finite-N steepest-descent free energy relative to the uniform sphere.

    The constraint is imposed with a Laplace multiplier ``z``. The saddle
    ``eps = (1/2) sum_k 1/(z - mu_k/(2 theta))`` is bracketed and solved on its
    strictly decreasing branch ``z > max_k mu_k / (2 theta)``, and
    ``F = -theta [z eps - (1/2) sum_k ln(z - mu_k/(2 theta))]`` minus the same
    expression at ``J = 0``. With ``gaussian_correction`` the Gaussian
    fluctuation factor ``-(1/2) ln phi''(z)`` (again reference-subtracted) is
    included; the result then misses ``ln Z`` by at most
    :data:`SADDLE_LOGZ_BAND`, an ``O(1/N)`` error per spin.
    """
    _check_common(theta, eps)
    mu = j.spectrum[0]
    n = mu.size
    if not np.any(mu):
        return 0.0
    a = mu / (2.0 * theta)
    w, gap = _solve_saddle(a, eps)
    d = w + gap  # z - a_k
    z = w + a.max()
    z0 = 0.5 * n / eps
    log_ratio = (z - z0) * eps - 0.5 * np.sum(np.log(d / z0))
    if gaussian_correction:
        phi2 = 0.5 * np.sum(1.0 / d ** 2)
        phi2_ref = 0.5 * n / z0 ** 2
        log_ratio -= 0.5 * math.log(phi2 / phi2_ref)
    return -theta * float(log_ratio)


# -- eigenbasis dynamics ---------------------------------------------------

def _uniform_sphere(rng, shape, eps):
    x = rng.standard_normal(shape)
    x *= np.sqrt(eps / np.sum(x * x, axis=-1, keepdims=True))
    return x


def _renormalize(y, eps):
    y *= np.sqrt(eps / np.sum(y * y, axis=-1, keepdims=True))


def _pairing(rng, mu, rows):
    """Independent random pairing of the modes for every row, as (hi, lo) index arrays."""
    n = mu.size
    perm = rng.permuted(np.broadcast_to(np.arange(n), (rows, n)), axis=1)
    a, b = perm[:, 0:n - 1:2], perm[:, 1:n:2]
    up = mu[a] >= mu[b]
    return np.where(up, a, b), np.where(up, b, a)


def _heat_bath_sweep(y, mu, beta, rng):
    hi, lo = _pairing(rng, mu, y.shape[0])
    yh = np.take_along_axis(y, hi, axis=1)
    yl = np.take_along_axis(y, lo, axis=1)
    rho2 = yh * yh + yl * yl
    kappa = 0.25 * beta * rho2 * (mu[hi] - mu[lo])
    psi = rng.vonmises(0.0, kappa)
    sign = np.where(yh >= 0.0, 1.0, -1.0)
    tunnel = rng.random(kappa.shape) < np.exp(-2.0 * kappa)
    if tunnel.any():
        fresh = np.where(rng.random(kappa.shape) < 0.5, 1.0, -1.0)
        sign = np.where(tunnel, fresh, sign)
    rho = np.sqrt(rho2)
    half = 0.5 * psi
    np.put_along_axis(y, hi, sign * rho * np.cos(half), axis=1)
    np.put_along_axis(y, lo, rho * np.sin(half), axis=1)


def _overrelax_sweep(y, mu, rng):
    _, lo = _pairing(rng, mu, y.shape[0])
    np.put_along_axis(y, lo, -np.take_along_axis(y, lo, axis=1), axis=1)


def _step(y, mu, beta, eps, rng):
    """One time unit: a heat-bath sweep followed by an over-relaxation sweep."""
    _heat_bath_sweep(y, mu, beta, rng)
    _overrelax_sweep(y, mu, rng)
    _renormalize(y, eps)


def integrated_autocorr_time(x, c=5.0):
    """Integrated autocorrelation time with automatic windowing.

    The window is the smallest ``M`` with ``M >= c * tau(M)``. Returns 1 for
    constant series.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return 1.0
    d = x - x.mean()
    var = d @ d / n
    if var == 0.0:
        return 1.0
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(d, size)
    acf = np.fft.irfft(f * np.conj(f), size)[:n] / (n * var)
    tau = 2.0 * np.cumsum(acf) - 1.0
    window = np.arange(n)
    ok = window >= c * tau
    m = int(np.argmax(ok)) if ok.any() else n - 1
    return float(max(tau[m], 1.0))


@dataclass
class ThermalObservables:
    """Per-sweep series from :func:`thermal_sample` and their summaries."""

    energy: np.ndarray
    condensate: np.ndarray
    burn_in: int
    tau_energy: float
    tau_condensate: float

    def _post(self, x):
        return x[self.burn_in:]

    @property
    def mean_energy(self):
        return float(self._post(self.energy).mean())

    @property
    def mean_condensate(self):
        return float(self._post(self.condensate).mean())

    @property
    def condensate_stderr(self):
        x = self._post(self.condensate)
        return float(x.std(ddof=1) * math.sqrt(self.tau_condensate / x.size)) if x.size > 1 else 0.0


def thermal_sample(j, theta, eps, n_sweeps, seed, burn_in=None, record_every=1, start=None):
    """Markov chain on the sphere targeting ``exp(s.J.s / (2 theta))``.

    Parameters
    ----------
    j : CouplingMatrix
    theta, eps : float
    n_sweeps : int
        Number of time units (heat-bath plus over-relaxation sweep each).
    seed : int
    burn_in : int, optional
        Sweeps discarded before recording; defaults to ``n_sweeps // 5``.
    record_every : int
        Thinning interval for the returned configurations.
    start : SpinConfiguration, optional
        Initial state; a uniform-random point on the sphere by default.

    Returns
    -------
    configs : list of SpinConfiguration
        Recorded after burn-in.
    obs : ThermalObservables
        Energy ``-sum_{i<j} J_ij s_i s_j`` and condensate fraction
        ``(s . v_max)^2 / eps`` for every sweep.
    """
    _check_common(theta, eps)
    if n_sweeps < 1:
        raise DomainError("n_sweeps must be >= 1")
    burn_in = n_sweeps // 5 if burn_in is None else int(burn_in)
    mu, vecs = j.spectrum
    rng = stream(seed)
    beta = 1.0 / theta
    if start is None:
        y = _uniform_sphere(rng, (1, mu.size), eps)
    else:
        y = (vecs.T @ np.asarray(start.values, dtype=float))[None, :]
        _renormalize(y, eps)
    top = mu.size - 1
    energy = np.empty(n_sweeps)
    cond = np.empty(n_sweeps)
    configs = []
    for t in range(n_sweeps):
        _step(y, mu, beta, eps, rng)
        energy[t] = -0.5 * float(mu @ (y[0] * y[0]))
        cond[t] = y[0, top] ** 2 / eps
        if t >= burn_in and (t - burn_in) % record_every == 0:
            configs.append(SpinConfiguration.project(vecs @ y[0], eps))
    post = slice(burn_in, None)
    obs = ThermalObservables(
        energy,
        cond,
        burn_in,
        integrated_autocorr_time(energy[post]),
        integrated_autocorr_time(cond[post]),
    )
    return configs, obs


# -- overlaps ----------------------------------------------------------------

@dataclass(frozen=True)
class OverlapEstimate:
    mean: float
    stderr: float
    n_pairs: int


def overlap_statistic(runs, direction=None):
    """Mean replica overlap ``(s^a . s^b) / eps`` over all pairs of runs.

    Each run is a sequence of configurations sampled at identical
    ``(J, theta, eps)`` from an independent seed; samples are paired by index.
    Before averaging, every run is multiplied by the sign of its time-averaged
    projection on ``direction`` (the condensate direction). Without an explicit
    direction the leading principal axis of the pooled samples is used.
    """
    if len(runs) < 2:
        raise DomainError("overlap needs at least two runs")
    length = min(len(r) for r in runs)
    if length < 1:
        raise DomainError("every run needs at least one configuration")
    eps = runs[0][0].radius_sq
    x = np.stack([np.stack([c.values for c in r[:length]]) for r in runs])  # (R, T, N)
    if direction is None:
        pooled = x.reshape(-1, x.shape[-1])
        _, _, vt = np.linalg.svd(pooled, full_matrices=False)
        direction = vt[0]
    direction = np.asarray(direction, dtype=float)
    proj = np.einsum("rtn,n->r", x, direction)
    signs = np.where(proj >= 0.0, 1.0, -1.0)
    x = x * signs[:, None, None]
    r = len(runs)
    pairs = list(combinations(range(r), 2))
    series = np.array([np.einsum("tn,tn->t", x[a], x[b]) / eps for a, b in pairs])  # (P, T)
    per_pair = series.mean(axis=1)
    mean = float(per_pair.mean())
    if r >= 3:
        loo = []
        for k in range(r):
            keep = [i for i, (a, b) in enumerate(pairs) if k not in (a, b)]
            loo.append(per_pair[keep].mean())
        loo = np.array(loo)
        stderr = float(math.sqrt((r - 1) / r * np.sum((loo - loo.mean()) ** 2)))
    else:
        q_t = series.mean(axis=0)
        if length > 1:
            tau = integrated_autocorr_time(q_t)
            stderr = float(q_t.std(ddof=1) * math.sqrt(tau / length))
        else:
            stderr = 0.0
    return OverlapEstimate(mean, stderr, len(pairs))


# -- aging -------------------------------------------------------------------

@dataclass
class AgingTrace:
    """Two-time correlations ``C(t_w, t_w + tau)`` after a quench.

    ``correlations[i, k]`` belongs to ``waiting_times[i]`` and ``tau_grid[k]``;
    ``stderr`` is the standard error over independent histories.
    """

    waiting_times: list
    tau_grid: list
    correlations: np.ndarray
    stderr: np.ndarray
    theta: float
    eps: float
    n_histories: int


def relax_and_age(j, theta, eps, waiting_times, tau_grid, seed, n_histories=64):
    """Quench from uniform-random starts and record two-time correlations.

    ``C(t_w, t_w + tau) = s(t_w) . s(t_w + tau) / eps``, averaged over
    ``n_histories`` independent histories evolved with the sampler dynamics.
    """
    _check_common(theta, eps)
    waiting_times = [int(t) for t in waiting_times]
    tau_grid = [int(t) for t in tau_grid]
    if not waiting_times or not tau_grid or min(waiting_times) < 0 or min(tau_grid) < 0:
        raise DomainError("waiting_times and tau_grid must be non-empty and non-negative")
    mu = j.spectrum[0]
    rng = stream(seed)
    y = _uniform_sphere(rng, (n_histories, mu.size), eps)
    wanted = sorted({tw + tau for tw in waiting_times for tau in tau_grid} | set(waiting_times))
    snaps = {}
    if 0 in wanted:
        snaps[0] = y.copy()
    beta = 1.0 / theta
    for t in range(1, wanted[-1] + 1):
        _step(y, mu, beta, eps, rng)
        if t in wanted:
            snaps[t] = y.copy()
    corr = np.empty((len(waiting_times), len(tau_grid)))
    err = np.empty_like(corr)
    for i, tw in enumerate(waiting_times):
        for k, tau in enumerate(tau_grid):
            c = np.einsum("mn,mn->m", snaps[tw], snaps[tw + tau]) / eps
            corr[i, k] = c.mean()
            err[i, k] = c.std(ddof=1) / math.sqrt(n_histories) if n_histories > 1 else 0.0
    return AgingTrace(waiting_times, tau_grid, corr, err, theta, eps, n_histories)


# -- Monte Carlo free energy ---------------------------------------------------

@dataclass(frozen=True)
class McEstimate:
    """Free-energy estimate with jackknife error and sampling diagnostics."""

    mean: float
    stderr: float
    n_samples: int
    seed: int
    ess: float
    n_stages: int
    flagged: bool


def _auto_stages(mu, theta, eps):
    n = mu.size
    spread = n * np.sum(mu * mu) - np.sum(mu) ** 2
    var = (0.5 * eps / theta) ** 2 * 2.0 * spread / (n * n * (n + 2.0))
    return int(min(max(math.ceil(MIXING_FACTOR * var / LOGWEIGHT_VARIANCE), 1), MAX_STAGES))


def free_energy_mc(j, theta, eps, n_samples, seed, n_stages=None):
    """Monte Carlo estimate of ``-theta ln < exp(s.J.s / (2 theta)) >_uniform``.

    The average runs over the uniform measure on the sphere of squared radius
    ``eps``. Samples start uniform and are annealed through ``n_stages``
    equally spaced inverse temperatures with the sampler dynamics
    (annealed importance sampling); ``n_stages = 1`` is plain uniform-sphere
    importance sampling. The default schedule scales the number of stages with
    the uniform-sphere log-weight variance so that the annealed weights keep a
    variance near :data:`LOGWEIGHT_VARIANCE`. The standard error is the
    leave-one-out jackknife over samples; ``flagged`` is set when the Kish
    effective sample size drops below :data:`ESS_THRESHOLD`.
    """
    _check_common(theta, eps)
    if n_samples < 2:
        raise DomainError("n_samples must be >= 2")
    mu = j.spectrum[0]
    if not np.any(mu):
        return McEstimate(0.0, 0.0, int(n_samples), int(seed), float(n_samples), 1, False)
    stages = _auto_stages(mu, theta, eps) if n_stages is None else int(n_stages)
    if stages < 1:
        raise DomainError("n_stages must be >= 1")
    rng = stream(seed)
    y = _uniform_sphere(rng, (int(n_samples), mu.size), eps)
    betas = np.linspace(0.0, 1.0 / theta, stages + 1)
    logw = np.zeros(int(n_samples))
    for k in range(1, stages + 1):
        logw += (betas[k] - betas[k - 1]) * 0.5 * ((y * y) @ mu)
        if k < stages:
            _step(y, mu, betas[k], eps, rng)
    n = logw.size
    total = logsumexp(logw)
    mean = -theta * (total - math.log(n))
    # leave-one-out log-mean-exp, stable through a common shift
    shift = logw.max()
    w = np.exp(logw - shift)
    s = w.sum()
    with np.errstate(divide="ignore"):
        loo = shift + np.log(np.maximum(s - w, 0.0)) - math.log(n - 1)
    if not np.all(np.isfinite(loo)):
        stderr = math.inf
    else:
        f_loo = -theta * loo
        stderr = float(math.sqrt((n - 1) / n * np.sum((f_loo - f_loo.mean()) ** 2)))
    ess = float(math.exp(2.0 * total - logsumexp(2.0 * logw)))
    flagged = ess < ESS_THRESHOLD
    if flagged:
        warnings.warn(
            f"free_energy_mc: effective sample size {ess:.1f} < {ESS_THRESHOLD:.0f}; estimate unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    return McEstimate(float(mean), stderr, n, int(seed), ess, stages, flagged)
