"""Versioned, strict YAML configuration for sweeps and the CLI subcommands.

Document layout (every section optional except ``schema``)::

    schema: cavssk.sweep/1
    seed: 1234
    threads: 1
    grid:                      # reduced coordinates, multiplied by fixed.sigma0
      theta:   {min: 0.02, max: 2.0, count: 64, scale: linear}   # theta / sigma0
      sigma:   {min: 0.02, max: 2.0, count: 64, scale: linear}   # sigma / sigma0
      delta_e: {min: 0.1,  max: 0.1, count: 1}                   # delta_e / (n_deg sigma0)
    fixed:
      n_deg: 1000
      eps_mode: phase-diagram  # pins eps = 1
      sigma0: 1.0
      e_ehf0: 0.0
      cluster: null            # preset name or {eps_m, eps_p, e1_m, e1_p, e_mp, n_electrons}
    oracle:
      kind: none               # none | mc | saddle
      n_deg: 128
      n_samples: 1000
      thetas: [4.0, 2.0, 1.0, 0.5]   # theta / theta_c, used by the `oracle` subcommand
      sigma: 1.0
    output:
      dir: out
      formats: [csv, svg]
      x_axis: theta
      y_axis: sigma
    couplings:
      model: goe               # goe | dipole
      n_deg: 512
      sigma: 1.0
      eps: 1.0
      n_occ: 16
      n_virt: 32
      lambda: 1.0
      magnitude: {kind: constant, value: 1.0}        # or {kind: lognormal, mu, s}
      orientation: {kind: uniform-sphere}            # or {kind: fixed-axis, angle}
      format: bin              # bin | csv
    aging:
      n_deg: 256
      sigma: 1.0
      eps: 1.0
      thetas: [4.0, 0.25]      # theta / theta_c
      waiting_times: [10, 40, 160, 640]
      tau_grid: [0, 5, 20, 80]
      n_histories: 64
"""

from dataclasses import dataclass, field, asdict
import math
from typing import Optional

import numpy as np
import yaml

from .cluster import PRESETS, ClusterEnergies, delta_e, ehf_energy
from .errors import ConfigError

__all__ = ["Axis", "SweepConfig", "dump_config", "parse_config", "load_config", "SCHEMA"]

SCHEMA = "cavssk.sweep/1"
AXES = ("theta", "sigma", "delta_e")


@dataclass(frozen=True)
class Axis:
    min: float
    max: float
    count: int = 1
    scale: str = "linear"

    def values(self):
        if self.count == 1:
            return np.array([float(self.min)])
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class Fixed:
    n_deg: int = 1000
    eps_mode: str = "phase-diagram"
    sigma0: float = 1.0
    e_ehf0: float = 0.0
    cluster: Optional[ClusterEnergies] = None


@dataclass(frozen=True)
class OracleSpec:
    kind: str = "none"
    n_deg: int = 128
    n_samples: int = 1000
    thetas: tuple = (4.0, 2.0, 1.0, 0.5)
    sigma: float = 1.0


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    formats: tuple = ("csv", "svg")
    x_axis: str = "theta"
    y_axis: str = "sigma"


@dataclass(frozen=True)
class CouplingsSpec:
    model: str = "goe"
    n_deg: int = 512
    sigma: float = 1.0
    eps: float = 1.0
    n_occ: int = 16
    n_virt: int = 32
    lam: float = 1.0
    magnitude: tuple = (("kind", "constant"), ("value", 1.0))
    orientation: tuple = (("kind", "uniform-sphere"),)
    format: str = "bin"


@dataclass(frozen=True)
class AgingSpec:
    n_deg: int = 256
    sigma: float = 1.0
    eps: float = 1.0
    thetas: tuple = (4.0, 0.25)
    waiting_times: tuple = (10, 40, 160, 640)
    tau_grid: tuple = (0, 5, 20, 80)
    n_histories: int = 64


_DEFAULT_GRID = {
    "theta": Axis(1.0, 1.0),
    "sigma": Axis(1.0, 1.0),
    "delta_e": Axis(0.1, 0.1),
}


@dataclass(frozen=True)
class SweepConfig:
    seed: int = 0
    threads: int = 1
    grid: dict = field(default_factory=lambda: dict(_DEFAULT_GRID))
    fixed: Fixed = Fixed()
    oracle: OracleSpec = OracleSpec()
    output: OutputSpec = OutputSpec()
    couplings: CouplingsSpec = CouplingsSpec()
    aging: AgingSpec = AgingSpec()

    @property
    def eps(self):
        return 1.0

    def absolute_axes(self):
        """Grid values in energy units: ``(theta, sigma, delta_e)`` arrays."""
        s0 = self.fixed.sigma0
        theta = self.grid["theta"].values() * s0
        sigma = self.grid["sigma"].values() * s0
        if self.fixed.cluster is not None:
            de = np.array([delta_e(self.fixed.cluster)])
        else:
            de = self.grid["delta_e"].values() * self.fixed.n_deg * s0
        return theta, sigma, de

    def e_ehf0(self):
        if self.fixed.cluster is not None:
            return ehf_energy(0.0, self.fixed.cluster)
        return self.fixed.e_ehf0


# -- parsing ------------------------------------------------------------------

def _line_index(node, path=(), out=None):
    """Map key paths to 1-based source lines from a composed YAML node tree."""
    if out is None:
        out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = path + (str(k.value),)
            out[key] = k.start_mark.line + 1
            _line_index(v, key, out)
    return out


class _Reader:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, msg, path):
        key = ".".join(path) if path else None
        line = None
        p = tuple(path)
        while p and line is None:
            line = self.lines.get(p)
            p = p[:-1]
        raise ConfigError(msg, key=key, line=line)

    def mapping(self, value, path, allowed):
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.fail("expected a mapping", path)
        for k in value:
            if str(k) not in allowed:
                self.fail(f"unknown key {k!r}", path + (str(k),))
        return value

    def number(self, d, key, path, default, lo=None, lo_open=False, integer=False):
        if key not in d or d[key] is None:
            if default is _REQUIRED:
                self.fail(f"missing required key {key!r}", path + (key,))
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{key} must be a number, got {v!r}", path + (key,))
        if integer:
            if isinstance(v, float) and not v.is_integer():
                self.fail(f"{key} must be an integer, got {v!r}", path + (key,))
            v = int(v)
        else:
            v = float(v)
            if not math.isfinite(v):
                self.fail(f"{key} must be finite", path + (key,))
        if lo is not None and (v <= lo if lo_open else v < lo):
            op = ">" if lo_open else ">="
            self.fail(f"{key} must be {op} {lo}, got {v!r}", path + (key,))
        return v

    def choice(self, d, key, path, default, options):
        v = d.get(key, default)
        if v is None:
            v = default
        if v not in options:
            self.fail(f"{key} must be one of {sorted(options)}, got {v!r}", path + (key,))
        return v

    def number_list(self, d, key, path, default, integer=False, lo=None, lo_open=False):
        if key not in d or d[key] is None:
            return default
        v = d[key]
        if not isinstance(v, list) or not v:
            self.fail(f"{key} must be a non-empty list", path + (key,))
        wrapped = {str(i): x for i, x in enumerate(v)}
        return tuple(
            self.number(wrapped, str(i), path + (key,), _REQUIRED, lo=lo, lo_open=lo_open, integer=integer)
            for i in range(len(v))
        )


_REQUIRED = object()


def _parse_axis(r, name, raw, path):
    d = r.mapping(raw, path, {"min", "max", "count", "scale"})
    lo = r.number(d, "min", path, _REQUIRED)
    hi = r.number(d, "max", path, lo)
    count = r.number(d, "count", path, 1, lo=1, integer=True)
    scale = r.choice(d, "scale", path, "linear", {"linear", "log"})
    if lo > hi:
        r.fail(f"axis {name}: min {lo} exceeds max {hi}", path + ("min",))
    if scale == "log" and lo <= 0:
        r.fail(f"axis {name}: log scale requires min > 0, got {lo}", path + ("min",))
    if name == "theta" and lo <= 0:
        r.fail(f"axis theta: temperatures must be > 0, got min {lo}", path + ("min",))
    if name == "sigma" and lo < 0:
        r.fail(f"axis sigma: fluctuation scale must be >= 0, got min {lo}", path + ("min",))
    if name == "delta_e" and lo <= 0:
        r.fail(f"axis delta_e: excitation energy must be > 0, got min {lo}", path + ("min",))
    return Axis(lo, hi, count, scale)


def _parse_cluster(r, raw, path):
    if raw is None:
        return None
    if isinstance(raw, str):
        if raw not in PRESETS:
            r.fail(f"unknown cluster preset {raw!r}; known: {sorted(PRESETS)}", path)
        return PRESETS[raw]
    keys = ("eps_m", "eps_p", "e1_m", "e1_p", "e_mp", "n_electrons")
    d = r.mapping(raw, path, set(keys))
    vals = {k: r.number(d, k, path, _REQUIRED if k in ("eps_m", "eps_p") else 0.0) for k in keys[:5]}
    vals["n_electrons"] = r.number(d, "n_electrons", path, 1, lo=1, integer=True)
    return ClusterEnergies(**vals)


def _parse_descriptor(r, raw, path, kinds, default):
    if raw is None:
        return default
    d = r.mapping(raw, path, {"kind"} | {f for fields in kinds.values() for f in fields})
    kind = r.choice(d, "kind", path, default[0][1], set(kinds))
    out = [("kind", kind)]
    for f in kinds[kind]:
        out.append((f, r.number(d, f, path, {"value": 1.0, "mu": 0.0, "s": 0.5, "angle": 0.0}[f])))
    extra = set(d) - {"kind"} - set(kinds[kind])
    if extra:
        r.fail(f"key {sorted(extra)[0]!r} does not apply to kind {kind!r}", path + (sorted(extra)[0],))
    return tuple(out)


def parse_config(text):
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        Naming the offending key and, where known, its source line.
    """
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {exc}", line=mark.line + 1 if mark else None) from None
    r = _Reader(_line_index(node) if node is not None else {})
    if raw is None:
        raw = {}
    top = r.mapping(
        raw, (), {"schema", "seed", "threads", "grid", "fixed", "oracle", "output", "couplings", "aging"}
    )
    if "schema" not in top:
        raise ConfigError("missing required key 'schema'", key="schema", line=1)
    if top["schema"] != SCHEMA:
        r.fail(f"unsupported schema {top['schema']!r}; expected {SCHEMA!r}", ("schema",))
    seed = r.number(top, "seed", (), 0, lo=0, integer=True)
    threads = r.number(top, "threads", (), 1, lo=1, integer=True)

    g = r.mapping(top.get("grid"), ("grid",), set(AXES))
    grid = dict(_DEFAULT_GRID)
    for name in AXES:
        if name in g:
            grid[name] = _parse_axis(r, name, g[name], ("grid", name))

    fx = r.mapping(top.get("fixed"), ("fixed",), {"n_deg", "eps_mode", "sigma0", "e_ehf0", "cluster"})
    p = ("fixed",)
    cluster = _parse_cluster(r, fx.get("cluster"), p + ("cluster",))
    if cluster is not None:
        if "delta_e" in g:
            r.fail("grid.delta_e conflicts with fixed.cluster, which sets delta_e", ("grid", "delta_e"))
        if not delta_e(cluster) > 0:
            r.fail(f"cluster excitation energy must be > 0, got {delta_e(cluster)!r}", p + ("cluster",))
    fixed = Fixed(
        n_deg=r.number(fx, "n_deg", p, 1000, lo=1, integer=True),
        eps_mode=r.choice(fx, "eps_mode", p, "phase-diagram", {"phase-diagram"}),
        sigma0=r.number(fx, "sigma0", p, 1.0, lo=0.0, lo_open=True),
        e_ehf0=r.number(fx, "e_ehf0", p, 0.0),
        cluster=cluster,
    )

    od = r.mapping(top.get("oracle"), ("oracle",), {"kind", "n_deg", "n_samples", "thetas", "sigma"})
    p = ("oracle",)
    oracle = OracleSpec(
        kind=r.choice(od, "kind", p, "none", {"none", "mc", "saddle"}),
        n_deg=r.number(od, "n_deg", p, 128, lo=2, integer=True),
        n_samples=r.number(od, "n_samples", p, 1000, lo=1000, integer=True),
        thetas=r.number_list(od, "thetas", p, OracleSpec.thetas, lo=0.0, lo_open=True),
        sigma=r.number(od, "sigma", p, 1.0, lo=0.0, lo_open=True),
    )

    outd = r.mapping(top.get("output"), ("output",), {"dir", "formats", "x_axis", "y_axis"})
    p = ("output",)
    formats = outd.get("formats", ["csv", "svg"])
    if not isinstance(formats, list) or not formats or any(f not in ("csv", "svg") for f in formats):
        r.fail(f"formats must be a non-empty list drawn from ['csv', 'svg'], got {formats!r}", p + ("formats",))
    out_dir = outd.get("dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        r.fail("dir must be a non-empty string", p + ("dir",))
    x_axis = r.choice(outd, "x_axis", p, "theta", set(AXES))
    y_axis = r.choice(outd, "y_axis", p, "sigma", set(AXES))
    if x_axis == y_axis:
        r.fail("x_axis and y_axis must differ", p + ("y_axis",))
    output = OutputSpec(out_dir, tuple(formats), x_axis, y_axis)

    cd = r.mapping(
        top.get("couplings"),
        ("couplings",),
        {"model", "n_deg", "sigma", "eps", "n_occ", "n_virt", "lambda", "magnitude", "orientation", "format"},
    )
    p = ("couplings",)
    couplings = CouplingsSpec(
        model=r.choice(cd, "model", p, "goe", {"goe", "dipole"}),
        n_deg=r.number(cd, "n_deg", p, 512, lo=2, integer=True),
        sigma=r.number(cd, "sigma", p, 1.0, lo=0.0),
        eps=r.number(cd, "eps", p, 1.0, lo=0.0),
        n_occ=r.number(cd, "n_occ", p, 16, lo=1, integer=True),
        n_virt=r.number(cd, "n_virt", p, 32, lo=1, integer=True),
        lam=r.number(cd, "lambda", p, 1.0, lo=0.0),
        magnitude=_parse_descriptor(
            r, cd.get("magnitude"), p + ("magnitude",),
            {"constant": ("value",), "lognormal": ("mu", "s")}, CouplingsSpec.magnitude,
        ),
        orientation=_parse_descriptor(
            r, cd.get("orientation"), p + ("orientation",),
            {"uniform-sphere": (), "fixed-axis": ("angle",)}, CouplingsSpec.orientation,
        ),
        format=r.choice(cd, "format", p, "bin", {"bin", "csv"}),
    )
    if couplings.eps > 1.0:
        r.fail(f"eps must lie in [0, 1], got {couplings.eps}", p + ("eps",))

    ad = r.mapping(
        top.get("aging"),
        ("aging",),
        {"n_deg", "sigma", "eps", "thetas", "waiting_times", "tau_grid", "n_histories"},
    )
    p = ("aging",)
    aging = AgingSpec(
        n_deg=r.number(ad, "n_deg", p, 256, lo=2, integer=True),
        sigma=r.number(ad, "sigma", p, 1.0, lo=0.0, lo_open=True),
        eps=r.number(ad, "eps", p, 1.0, lo=0.0, lo_open=True),
        thetas=r.number_list(ad, "thetas", p, AgingSpec.thetas, lo=0.0, lo_open=True),
        waiting_times=r.number_list(ad, "waiting_times", p, AgingSpec.waiting_times, integer=True, lo=0),
        tau_grid=r.number_list(ad, "tau_grid", p, AgingSpec.tau_grid, integer=True, lo=0),
        n_histories=r.number(ad, "n_histories", p, 64, lo=2, integer=True),
    )
    if aging.eps > 1.0:
        r.fail(f"eps must lie in (0, 1], got {aging.eps}", p + ("eps",))

    return SweepConfig(seed, threads, grid, fixed, oracle, output, couplings, aging)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def _plain(obj):
    if isinstance(obj, tuple) and obj and all(isinstance(x, tuple) and len(x) == 2 for x in obj):
        return {k: _plain(v) for k, v in obj}
    if isinstance(obj, (tuple, list)):
        return [_plain(x) for x in obj]
    return obj


def dump_config(cfg):
    """Serialize a config to a YAML document that parses back to an equal config."""
    fixed = {
        "n_deg": cfg.fixed.n_deg,
        "eps_mode": cfg.fixed.eps_mode,
        "sigma0": cfg.fixed.sigma0,
        "e_ehf0": cfg.fixed.e_ehf0,
        "cluster": asdict(cfg.fixed.cluster) if cfg.fixed.cluster is not None else None,
    }
    grid = {name: asdict(ax) for name, ax in cfg.grid.items()}
    if cfg.fixed.cluster is not None:
        grid.pop("delta_e", None)
    couplings = {k: _plain(v) for k, v in asdict(cfg.couplings).items()}
    couplings["lambda"] = couplings.pop("lam")
    doc = {
        "schema": SCHEMA,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "grid": grid,
        "fixed": fixed,
        "oracle": {k: _plain(v) for k, v in asdict(cfg.oracle).items()},
        "output": {k: _plain(v) for k, v in asdict(cfg.output).items()},
        "couplings": couplings,
        "aging": {k: _plain(v) for k, v in asdict(cfg.aging).items()},
    }
    return yaml.safe_dump(doc, sort_keys=False)
