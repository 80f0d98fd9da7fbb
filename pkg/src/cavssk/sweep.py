"""Parameter sweeps over (theta, sigma, delta_e) at eps = 1."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
import os
from typing import Optional

from .couplings import sample_goe_couplings
from .errors import DomainError, NumericalError
from .finite_n import free_energy_mc, free_energy_saddle
from .rng import child_seeds
from .thermo import Phase, SskParams, classify_phase, free_energy, total_ensemble_energy

__all__ = ["PhasePoint", "THREADS_ENV", "resolve_threads", "run_sweep"]

log = logging.getLogger(__name__)

THREADS_ENV = "CAVSSK_THREADS"


@dataclass(frozen=True)
class PhasePoint:
    """One sweep sample in energy units.

    ``oracle_f`` is a finite-N free energy rescaled to ``n_deg`` sites, so it is
    directly comparable with ``f_corr``.
    """

    theta: float
    sigma: float
    delta_e: float
    phase: Phase
    f_corr: float
    e_total: float
    oracle_f: Optional[float] = None
    oracle_stderr: Optional[float] = None
    oracle_error: Optional[str] = None

    def __post_init__(self):
        # NUL cannot be written to CSV; keep messages round-trippable
        if self.oracle_error is not None and "\x00" in self.oracle_error:
            object.__setattr__(self, "oracle_error", self.oracle_error.replace("\x00", "\ufffd"))


def resolve_threads(requested=None):
    """Worker count: the ``CAVSSK_THREADS`` environment variable wins, then ``requested``."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if n < 1:
            raise DomainError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return max(int(requested or 1), 1)


def _oracle(cfg, sigma, theta, seed):
    spec = cfg.oracle
    n = spec.n_deg
    j = sample_goe_couplings(n, sigma, 1.0, seed)
    scale = cfg.fixed.n_deg / n
    if spec.kind == "saddle":
        return free_energy_saddle(j, theta, 1.0) * scale, None
    est = free_energy_mc(j, theta, 1.0, spec.n_samples, seed)
    return est.mean * scale, est.stderr * scale


def _evaluate(cfg, theta, sigma, de, e0, seed):
    n_deg = cfg.fixed.n_deg
    phase = classify_phase(theta, sigma, n_deg, de)
    f = free_energy(theta, SskParams(sigma, 1.0, n_deg))
    e_total = total_ensemble_energy(theta, sigma, n_deg, de, e0)
    oracle_f = oracle_err = error = None
    if cfg.oracle.kind != "none":
        if sigma == 0.0:
            oracle_f, oracle_err = 0.0, (0.0 if cfg.oracle.kind == "mc" else None)
        else:
            try:
                oracle_f, oracle_err = _oracle(cfg, sigma, theta, seed)
            except (NumericalError, DomainError, FloatingPointError) as exc:
                error = f"{type(exc).__name__}: {exc}"
                log.warning("oracle failed at theta=%r sigma=%r: %s", theta, sigma, error)
    return PhasePoint(theta, sigma, de, phase, f, e_total, oracle_f, oracle_err, error)


def run_sweep(cfg, threads=None):
    """Evaluate every grid point of ``cfg``.

    Points are ordered with ``theta`` varying fastest, then ``sigma``, then
    ``delta_e``. Point ``k`` draws its oracle matrix from the stream
    ``(cfg.seed, k)``, so results do not depend on the worker count.
    """
    thetas, sigmas, des = cfg.absolute_axes()
    e0 = cfg.e_ehf0()
    jobs = [(float(t), float(s), float(d)) for d in des for s in sigmas for t in thetas]
    seeds = child_seeds(cfg.seed, len(jobs)) if cfg.oracle.kind != "none" else [0] * len(jobs)
    workers = resolve_threads(threads if threads is not None else cfg.threads)

    def work(k):
        t, s, d = jobs[k]
        return _evaluate(cfg, t, s, d, e0, seeds[k])

    if workers == 1:
        return [work(k) for k in range(len(jobs))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, range(len(jobs))))
