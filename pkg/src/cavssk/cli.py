"""Command-line entry point: ``cavssk {sweep,oracle,aging,gen-couplings}``.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical or
domain failures.
"""

import argparse
from dataclasses import replace
import logging
import os
import sys

import numpy as np

from .config import SweepConfig, load_config
from .couplings import (
    ConstantMagnitude,
    EnsembleSpec,
    FixedAxis,
    LognormalMagnitude,
    UniformSphere,
    sample_dipole_couplings,
    sample_goe_couplings,
    write_matrix,
    write_matrix_csv,
)
from .emit import emit_phase_diagram, write_table_csv
from .errors import ConfigError, DomainError, NumericalError
from .finite_n import free_energy_mc, free_energy_saddle, relax_and_age
from .rng import child_seeds
from .sweep import resolve_threads, run_sweep
from .thermo import SskParams, free_energy

log = logging.getLogger("cavssk")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

ORACLE_COLUMNS = (
    "n_deg", "sigma", "eps", "theta", "seed", "model",
    "f_closed", "f_saddle", "f_mc", "f_mc_stderr", "ess", "n_stages", "flagged",
)
AGING_COLUMNS = (
    "n_deg", "sigma", "eps", "theta", "seed", "model",
    "t_w", "tau", "correlation", "stderr", "n_histories",
)


def _load(args):
    cfg = load_config(args.config) if args.config else SweepConfig()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be >= 0", key="seed")
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _out_dir(args, cfg):
    path = args.out or cfg.output.dir
    os.makedirs(path, exist_ok=True)
    return path


def cmd_sweep(args, cfg):
    points = run_sweep(cfg, threads=resolve_threads(args.threads or cfg.threads))
    out = _out_dir(args, cfg)
    for fmt in cfg.output.formats:
        path = os.path.join(out, f"phase_diagram.{fmt}")
        emit_phase_diagram(points, path, fmt, cfg.output.x_axis, cfg.output.y_axis)
        print(path)
    failed = sum(p.oracle_error is not None for p in points)
    if failed:
        log.warning("%d of %d oracle evaluations failed; see the oracle_error column", failed, len(points))


def cmd_oracle(args, cfg):
    spec = cfg.oracle
    n, sigma = spec.n_deg, spec.sigma
    j = sample_goe_couplings(n, sigma, 1.0, cfg.seed)
    seeds = child_seeds(cfg.seed, len(spec.thetas), 1)
    rows = []
    for rel, seed in zip(spec.thetas, seeds):
        theta = rel * sigma
        closed = free_energy(theta, SskParams(sigma, 1.0, n)) / n
        saddle = free_energy_saddle(j, theta, 1.0) / n
        if spec.kind == "saddle":
            mc = mc_err = ess = stages = flagged = None
        else:
            est = free_energy_mc(j, theta, 1.0, spec.n_samples, seed)
            mc, mc_err, ess, stages, flagged = (
                est.mean / n, est.stderr / n, est.ess, est.n_stages, est.flagged,
            )
        rows.append((n, sigma, 1.0, theta, seed, "goe", closed, saddle, mc, mc_err, ess, stages, flagged))
    path = os.path.join(_out_dir(args, cfg), "oracle.csv")
    write_table_csv(path, ORACLE_COLUMNS, rows)
    print(path)


def cmd_aging(args, cfg):
    spec = cfg.aging
    j = sample_goe_couplings(spec.n_deg, spec.sigma, spec.eps, cfg.seed)
    seeds = child_seeds(cfg.seed, len(spec.thetas), 2)
    rows = []
    for rel, seed in zip(spec.thetas, seeds):
        theta = rel * spec.eps * spec.sigma
        tr = relax_and_age(j, theta, spec.eps, spec.waiting_times, spec.tau_grid, seed, spec.n_histories)
        for i, tw in enumerate(tr.waiting_times):
            for k, tau in enumerate(tr.tau_grid):
                rows.append((
                    spec.n_deg, spec.sigma, spec.eps, theta, seed, "goe", tw, tau,
                    float(tr.correlations[i, k]), float(tr.stderr[i, k]), spec.n_histories,
                ))
    path = os.path.join(_out_dir(args, cfg), "aging.csv")
    write_table_csv(path, AGING_COLUMNS, rows)
    print(path)


def _descriptor(pairs):
    d = dict(pairs)
    kind = d.pop("kind")
    return {
        "constant": ConstantMagnitude,
        "lognormal": LognormalMagnitude,
        "uniform-sphere": UniformSphere,
        "fixed-axis": FixedAxis,
    }[kind](**d)


def cmd_gen_couplings(args, cfg):
    c = cfg.couplings
    if c.model == "goe":
        m = sample_goe_couplings(c.n_deg, c.sigma, c.eps, cfg.seed)
    else:
        spec = EnsembleSpec(
            c.n_occ, c.n_virt, c.lam, _descriptor(c.magnitude), _descriptor(c.orientation), cfg.seed
        )
        m = sample_dipole_couplings(spec)
    path = os.path.join(_out_dir(args, cfg), f"couplings.{c.format}")
    (write_matrix if c.format == "bin" else write_matrix_csv)(m, path)
    print(path)


COMMANDS = {
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "aging": cmd_aging,
    "gen-couplings": cmd_gen_couplings,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cavssk", description="Collective correlation phases from the spherical SK model."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "sweep": "phase-diagram sweep over (theta, sigma, delta_e)",
        "oracle": "finite-N free energies against the closed form",
        "aging": "two-time correlations after a quench",
        "gen-couplings": "sample and store a coupling matrix",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help="output directory (default: output.dir)")
        p.add_argument("--threads", type=int, help="worker count; CAVSSK_THREADS overrides")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _load(args)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1", key="threads")
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            COMMANDS[args.command](args, cfg)
    except (ConfigError, OSError) as exc:
        print(f"cavssk: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, DomainError, FloatingPointError) as exc:
        print(f"cavssk: numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
