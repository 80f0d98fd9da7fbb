"""Random transversal coupling matrices and the fluctuation-scale estimator.

Matrices follow the energy convention ``E = -sum_{i<j} J_ij s_i s_j``, so the
top eigenvector of ``J`` is the lowest-energy direction.

Binary container (little-endian)::

    magic   4 bytes   b"SSKJ"
    version uint32    1
    dim     uint64    matrix dimension n
    metalen uint64    byte length of the UTF-8 JSON metadata block
    meta    metalen   JSON object (may be empty: "{}")
    data    float64 * n(n+1)/2, row-major lower triangle including the diagonal
"""

from dataclasses import dataclass, field, asdict
from functools import cached_property
import csv
import hashlib
import json
import math
import struct
from typing import NamedTuple, Union

import numpy as np

from .errors import DomainError
from .rng import stream

__all__ = [
    "ConstantMagnitude",
    "CouplingMatrix",
    "EnsembleSpec",
    "FixedAxis",
    "LognormalMagnitude",
    "SigmaEstimate",
    "UniformSphere",
    "estimate_sigma",
    "read_matrix",
    "read_matrix_csv",
    "sample_dipole_couplings",
    "sample_goe_couplings",
    "semicircle_cdf",
    "semicircle_ks",
    "write_matrix",
    "write_matrix_csv",
]

_MAGIC = b"SSKJ"
_VERSION = 1


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Symmetric, zero-diagonal coupling matrix plus its generation record."""

    entries: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"coupling matrix must be square, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise DomainError("coupling matrix must be symmetric")
        if np.any(np.diag(a) != 0.0):
            raise DomainError("coupling matrix must have a zero diagonal")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @property
    def dim(self):
        return self.entries.shape[0]

    @cached_property
    def spectrum(self):
        """Full eigendecomposition ``(eigenvalues ascending, eigenvectors)``."""
        w, v = np.linalg.eigh(self.entries)
        w.flags.writeable = False
        v.flags.writeable = False
        return w, v

    def offdiagonal(self):
        """Strict upper-triangle entries as a flat array."""
        iu = np.triu_indices(self.dim, k=1)
        return self.entries[iu]


# -- ensemble descriptors ----------------------------------------------------

@dataclass(frozen=True)
class ConstantMagnitude:
    value: float = 1.0


@dataclass(frozen=True)
class LognormalMagnitude:
    mu: float = 0.0
    s: float = 0.5


@dataclass(frozen=True)
class UniformSphere:
    pass


@dataclass(frozen=True)
class FixedAxis:
    angle: float = 0.0


@dataclass(frozen=True)
class EnsembleSpec:
    """Model molecular ensemble for the dipole-product generator.

    ``n_occ * n_virt`` degenerate indices each carry one transition dipole whose
    projection on the cavity polarization axis is magnitude times the axis
    component of the molecular orientation.
    """

    n_occ: int
    n_virt: int
    lam: float = 1.0
    dipole_magnitude: Union[ConstantMagnitude, LognormalMagnitude] = ConstantMagnitude()
    orientation: Union[UniformSphere, FixedAxis] = UniformSphere()
    seed: int = 0

    def __post_init__(self):
        if self.n_occ < 1 or self.n_virt < 1:
            raise DomainError("n_occ and n_virt must be >= 1")
        if not self.lam >= 0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")

    @property
    def n_deg(self):
        return self.n_occ * self.n_virt

    def digest(self):
        record = {
            "n_occ": self.n_occ,
            "n_virt": self.n_virt,
            "lambda": self.lam,
            "magnitude": [type(self.dipole_magnitude).__name__, asdict(self.dipole_magnitude)],
            "orientation": [type(self.orientation).__name__, asdict(self.orientation)],
            "seed": self.seed,
        }
        blob = json.dumps(record, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


# -- generators --------------------------------------------------------------

def sample_goe_couplings(n_deg, sigma, eps, seed):
    """Gaussian couplings with ``Var(J_ij) = (eps * sigma)^2 * n_deg``.

    Off-diagonal entries are i.i.d. zero-mean normals, the diagonal is zero.
    The same ``(n_deg, sigma, eps, seed)`` always gives the same matrix.
    """
    if n_deg < 2:
        raise DomainError(f"n_deg must be >= 2, got {n_deg}")
    if not sigma >= 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"eps must lie in [0, 1], got {eps}")
    n = int(n_deg)
    scale = eps * sigma * math.sqrt(n)
    rng = stream(seed)
    upper = rng.standard_normal(n * (n - 1) // 2) * scale
    j = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    j[iu] = upper
    j.T[iu] = upper
    meta = {"model": "goe", "n_deg": n, "sigma": float(sigma), "eps": float(eps), "seed": int(seed)}
    return CouplingMatrix(j, meta)


def _dipole_projections(spec, rng):
    n = spec.n_deg
    mag = spec.dipole_magnitude
    if isinstance(mag, ConstantMagnitude):
        m = np.full(n, float(mag.value))
    elif isinstance(mag, LognormalMagnitude):
        m = rng.lognormal(mag.mu, mag.s, size=n)
    else:
        raise DomainError(f"unknown dipole magnitude model {mag!r}")
    ori = spec.orientation
    if isinstance(ori, UniformSphere):
        # axis component of an isotropic unit vector is uniform on [-1, 1]
        u = rng.uniform(-1.0, 1.0, size=n)
    elif isinstance(ori, FixedAxis):
        u = np.full(n, math.cos(ori.angle))
    else:
        raise DomainError(f"unknown orientation model {ori!r}")
    return m * u


def sample_dipole_couplings(spec):
    """Dipole-product couplings ``J_ij = -lambda^2 d_i d_j`` (i != j)."""
    rng = stream(spec.seed)
    d = _dipole_projections(spec, rng)
    j = -(spec.lam ** 2) * np.outer(d, d)
    np.fill_diagonal(j, 0.0)
    # exact symmetry regardless of floating-point evaluation order
    j = np.triu(j, 1)
    j = j + j.T
    meta = {
        "model": "dipole",
        "n_deg": spec.n_deg,
        "spec_hash": spec.digest(),
        "seed": int(spec.seed),
    }
    return CouplingMatrix(j, meta)


class SigmaEstimate(NamedTuple):
    value: float
    stderr: float


def estimate_sigma(m, eps=1.0):
    """Invert the coupling-variance convention: ``sqrt(Var(J_ij) / n) / eps``.

    The standard error comes from the delta method applied to the sample
    variance of the off-diagonal entries.
    """
    if m.dim < 2:
        raise DomainError("need a matrix of dimension >= 2")
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps must lie in (0, 1], got {eps}")
    x = m.offdiagonal()
    if not np.any(x):
        return SigmaEstimate(0.0, 0.0)
    n_pairs = x.size
    var = x.var(ddof=1) if n_pairs > 1 else float(x[0] ** 2)
    value = math.sqrt(var / m.dim) / eps
    if n_pairs < 2 or var == 0.0:
        return SigmaEstimate(value, 0.0)
    dev = x - x.mean()
    var_of_var = max((np.mean(dev ** 4) - var ** 2) / n_pairs, 0.0)
    return SigmaEstimate(value, value / (2.0 * var) * math.sqrt(var_of_var))


# -- spectral diagnostics ----------------------------------------------------

def semicircle_cdf(x, radius):
    """CDF of the Wigner semicircle supported on ``[-radius, radius]``."""
    t = np.clip(np.asarray(x, dtype=float) / radius, -1.0, 1.0)
    return 0.5 + (t * np.sqrt(1.0 - t * t) + np.arcsin(t)) / np.pi


def semicircle_ks(eigenvalues, radius):
    """Kolmogorov-Smirnov distance between a spectrum and the semicircle."""
    w = np.sort(np.asarray(eigenvalues, dtype=float))
    n = w.size
    cdf = semicircle_cdf(w, radius)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


# -- persistence ---------------------------------------------------------------

def write_matrix(m, path):
    """Write ``m`` to the binary lower-triangle container."""
    n = m.dim
    meta = json.dumps(m.meta, sort_keys=True).encode("utf-8")
    il = np.tril_indices(n)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQQ", _VERSION, n, len(meta)))
        fh.write(meta)
        fh.write(m.entries[il].astype("<f8").tobytes())


def read_matrix(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise DomainError(f"{path}: not a coupling-matrix container")
    version, n, metalen = struct.unpack_from("<IQQ", blob, 4)
    if version != _VERSION:
        raise DomainError(f"{path}: unsupported container version {version}")
    off = 4 + struct.calcsize("<IQQ")
    meta = json.loads(blob[off:off + metalen].decode("utf-8")) if metalen else {}
    off += metalen
    count = n * (n + 1) // 2
    data = np.frombuffer(blob, dtype="<f8", count=count, offset=off)
    j = np.zeros((n, n))
    il = np.tril_indices(n)
    j[il] = data
    j.T[il] = data
    return CouplingMatrix(j, meta)


def write_matrix_csv(m, path):
    """Dense CSV dump for debugging; one matrix row per line, ``repr`` floats."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in m.entries:
            w.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path, meta=None):
    with open(path, newline="") as fh:
        rows = [[float(v) for v in r] for r in csv.reader(fh) if r]
    return CouplingMatrix(np.array(rows), dict(meta or {}))
