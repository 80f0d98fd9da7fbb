"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy import ndimage, special
from scipy.optimize import brentq

from cavssk import (
    ClusterEnergies,
    CouplingMatrix,
    Phase,
    SskParams,
    classify_phase,
    critical_theta,
    curvature,
    free_energy,
    free_energy_mc,
    free_energy_saddle,
    ground_state_energy,
    overlap_statistic,
    relax_and_age,
    sample_goe_couplings,
    ssk_entropy,
    thermal_sample,
    total_energy_of_eps,
)
from cavssk.cluster import delta_e, scan_minimize
from cavssk.config import SCHEMA, parse_config
from cavssk.couplings import semicircle_ks
from cavssk.emit import phase_csv_text, rectangular_grid
from cavssk.finite_n import SADDLE_LOGZ_BAND
from cavssk.rng import child_seeds
from cavssk.sweep import THREADS_ENV, run_sweep


def ssk_f_reference(theta, sigma):
    """Per-spin closed form at eps = 1, written out independently of the package."""
    if theta >= sigma:
        return -sigma * sigma / (4.0 * theta)
    return -(sigma - 0.5 * theta * math.log(sigma / theta) - 0.75 * theta)


def two_spin_exact(j, theta):
    a = j / (2.0 * theta)
    return -theta * (math.log(special.ive(0, a)) + a)


# 1 --------------------------------------------------------------------------

def test_branch_continuity_and_entropy(criterion):
    t0 = time.perf_counter()
    worst_cont = worst_ent = 0.0
    for sigma, eps, n in [(1.0, 1.0, 1), (2.5, 0.4, 1000), (0.03, 0.9, 77)]:
        p = SskParams(sigma, eps, n)
        tc = critical_theta(p)
        para = free_energy(tc, p)  # tc <= theta branch
        glass = free_energy(math.nextafter(tc, 0.0), p)
        worst_cont = max(worst_cont, abs(para - glass) / abs(para))
        for theta in np.geomspace(0.1, 10.0, 100) * tc:
            h = 1e-6 * theta
            fd = -(free_energy(theta + h, p) - free_energy(theta - h, p)) / (2 * h)
            s = ssk_entropy(theta, p)
            worst_ent = max(worst_ent, abs(s - fd) / abs(s))
    dt = time.perf_counter() - t0
    ok = worst_cont < 1e-10 and worst_ent < 1e-8 and dt < 1.0
    criterion(1, ok, f"continuity rel {worst_cont:.1e} (<1e-10), entropy rel {worst_ent:.1e} (<1e-8), {dt:.2f}s (<1s)")


# 2 --------------------------------------------------------------------------

def test_zero_temperature_limit(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for sigma, eps, n in [(1.0, 1.0, 1000), (0.3, 0.5, 10), (4.0, 0.2, 3)]:
        p = SskParams(sigma, eps, n)
        f = free_energy(1e-8 * eps * sigma, p) / n
        worst = max(worst, abs(f + eps * sigma) / (eps * sigma))
    dt = time.perf_counter() - t0
    criterion(2, worst < 1e-6 and dt < 1.0, f"rel err {worst:.1e} (<1e-6), {dt:.3f}s (<1s)")


# 3 --------------------------------------------------------------------------

def test_spectral_edge(criterion):
    t0 = time.perf_counter()
    n, sigma = 2000, 1.0
    e_gs, ks = [], []
    for seed in child_seeds(3, 20):
        m = sample_goe_couplings(n, sigma, 1.0, seed)
        e, _ = ground_state_energy(m)
        e_gs.append(e / n)
        ks.append(semicircle_ks(np.linalg.eigvalsh(m.entries), 2 * n * sigma))
    mean = float(np.mean(e_gs))
    dt = time.perf_counter() - t0
    ok = -1.00 <= mean <= -0.94 and abs(mean + sigma) <= 0.03 * sigma and max(ks) < 0.05 and dt < 120
    criterion(3, ok, f"mean E_gs/N {mean:.4f} in [-1,-0.94], max KS {max(ks):.4f} (<0.05), {dt:.1f}s (<120s)")


# 4 --------------------------------------------------------------------------

def test_free_energy_triangle(criterion):
    t0 = time.perf_counter()
    n, sigma = 512, 1.0
    m = sample_goe_couplings(n, sigma, 1.0, 4)
    tc = sigma
    theta = 2 * tc
    closed = free_energy(theta, SskParams(sigma, 1.0, n)) / n
    saddle = free_energy_saddle(m, theta) / n
    est = free_energy_mc(m, theta, 1.0, 1000, seed=41)
    mc, se = est.mean / n, est.stderr / n
    tol = lambda a, b: max(0.02 * abs(b), 3 * se)
    hot_ok = (
        abs(mc - closed) <= tol(mc, closed)
        and abs(saddle - closed) <= tol(saddle, closed)
        and abs(mc - saddle) <= tol(mc, saddle)
    )
    theta = 0.5 * tc
    closed_c = free_energy(theta, SskParams(sigma, 1.0, n)) / n
    saddle_c = free_energy_saddle(m, theta) / n
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        cold = free_energy_mc(m, theta, 1.0, 1000, seed=42)
    cold_ok = abs(saddle_c - closed_c) <= 0.05 * abs(closed_c) and cold.flagged == (cold.ess < 50)
    dt = time.perf_counter() - t0
    ok = hot_ok and cold_ok and dt < 300
    criterion(
        4,
        ok,
        f"2Tc: mc {mc:.5f}±{se:.5f} saddle {saddle:.5f} closed {closed:.5f}; "
        f"0.5Tc: saddle {saddle_c:.4f} vs {closed_c:.4f} ({abs(saddle_c / closed_c - 1):.1%}, <5%), "
        f"mc ess {cold.ess:.1f} flagged={cold.flagged}; {dt:.0f}s (<300s)",
    )


# 5 --------------------------------------------------------------------------

def test_two_spin_oracle(criterion):
    t0 = time.perf_counter()
    j = 1.0
    m = CouplingMatrix(np.array([[0.0, j], [j, 0.0]]))
    parts, ok = [], True
    for k, rel in enumerate((0.25, 1.0, 4.0)):
        theta = rel * j
        exact = two_spin_exact(j, theta)
        est = free_energy_mc(m, theta, 1.0, 4000, seed=100 + k)
        sad = free_energy_saddle(m, theta)
        ok &= abs(est.mean - exact) <= 3 * est.stderr and abs(sad - exact) <= SADDLE_LOGZ_BAND * theta
        parts.append(
            f"T={rel}j: |mc-exact|/se {abs(est.mean - exact) / est.stderr:.2f}, "
            f"|saddle-exact|/T {abs(sad - exact) / theta:.3f}"
        )
    dt = time.perf_counter() - t0
    ok &= dt < 10
    criterion(5, ok, "; ".join(parts) + f" (band {SADDLE_LOGZ_BAND}); {dt:.2f}s (<10s)")


# 6 --------------------------------------------------------------------------

def _second_difference(f, x, h):
    d = lambda s: (f(x + s) - 2.0 * f(x) + f(x - s)) / (s * s)
    return (4.0 * d(h / 2) - d(h)) / 3.0  # Richardson: O(h^4)


def test_curvature_formula(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst, branches = 0.0, set()
    for k in range(200):
        c = ClusterEnergies(*rng.uniform(-1, 1, 5), n_electrons=int(rng.integers(1, 20)))
        sigma = rng.uniform(0.2, 3.0)
        eps = rng.uniform(0.1, 0.9)
        n = int(rng.integers(10, 2000))
        # alternate sides of the seam eps = theta / sigma
        r = rng.uniform(0.2, 0.8) if k % 2 else rng.uniform(1.25, 5.0)
        theta = r * eps * sigma
        branches.add(theta >= eps * sigma)
        f = lambda e: total_energy_of_eps(e, theta, c, sigma, n)
        h = 1e-2 * min(eps, 1 - eps, abs(eps - theta / sigma))
        fd = _second_difference(f, eps, h)
        an = curvature(eps, theta, c, sigma, n)
        worst = max(worst, abs(fd - an) / abs(an))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and branches == {True, False} and dt < 1.0
    criterion(6, ok, f"max rel err {worst:.1e} (<1e-6) over 200 instances, both branches, {dt:.2f}s (<1s)")


# 7 --------------------------------------------------------------------------

def test_endpoint_theorem(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    violations, chose_one = 0, 0
    for _ in range(500):
        n_e = int(rng.integers(1, 10))
        e1m, e1p, emp = rng.uniform(-1, 1, 3)
        scale = 2 * n_e * max(abs(e1m), abs(e1p), abs(emp))  # EHF two-electron energy scale
        n = int(math.ceil(100 * scale * rng.uniform(1.0, 3.0))) + 1
        sigma = rng.uniform(0.5, 2.0)
        theta = rng.uniform(0.05, 3.0) * sigma
        # orbital gap spread so that delta_e / n_deg covers all three phases
        gap_total = rng.uniform(0.01, 1.2) * n
        eps_m = rng.uniform(-1, 1)
        base = ClusterEnergies(eps_m, eps_m, e1m, e1p, emp, n_e)
        eps_p = eps_m + (gap_total - delta_e(base)) / (2 * n_e)
        c = ClusterEnergies(eps_m, eps_p, e1m, e1p, emp, n_e)
        if not delta_e(c) > 0:
            continue
        eps_min, _, _ = scan_minimize(theta, c, sigma, n)
        want = 0.0 if classify_phase(theta, sigma, n, delta_e(c)) is Phase.UNCORRELATED else 1.0
        violations += eps_min not in (0.0, 1.0) or eps_min != want
        chose_one += eps_min == 1.0
    dt = time.perf_counter() - t0
    ok = violations == 0 and 0 < chose_one < 500 and dt < 30
    criterion(7, ok, f"{violations} violations in 500 clusters ({chose_one} correlated), {dt:.1f}s (<30s)")


# 8 --------------------------------------------------------------------------

FIG1 = f"""\
schema: {SCHEMA}
seed: 2024
grid:
  theta: {{min: 0.02, max: 2.0, count: 64}}
  sigma: {{min: 0.02, max: 2.0, count: 64}}
  delta_e: {{min: 0.1}}
fixed: {{n_deg: 1000, sigma0: 1.0}}
oracle: {{kind: saddle, n_deg: 8}}
"""


def test_fig1_topology(criterion, monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    cfg = parse_config(FIG1)
    t0 = time.perf_counter()
    points = run_sweep(cfg, threads=1)
    dt = time.perf_counter() - t0
    xs, ys, cells = rectangular_grid(points)
    labels = np.array([[list(Phase).index(p.phase) for p in row] for row in cells])

    regions = {ph: ndimage.label(labels == k)[1] for k, ph in enumerate(Phase)}
    contiguous = all(v == 1 for v in regions.values())

    # independent classification: implicit uncorrelated boundary sigma*(theta) by brentq
    de_per = 0.1
    mismatches, para_glass_off = 0, 0
    step = xs[1] - xs[0]
    for ix, theta in enumerate(xs):
        s_star = brentq(lambda s: ssk_f_reference(theta, s) + de_per, 1e-12, 100.0, xtol=1e-14)
        for iy, sigma in enumerate(ys):
            if sigma <= s_star:
                want = Phase.UNCORRELATED
            elif theta > sigma:
                want = Phase.PARACORRELATED
            else:
                want = Phase.SPIN_GLASS_CORRELATED
            got = cells[iy, ix].phase
            # cells within 1e-9 of the implicit curve may sit on either side
            near = abs(sigma - s_star) < 1e-9 * s_star
            mismatches += got is not want and not near
            if got is Phase.PARACORRELATED and theta <= sigma - step:
                para_glass_off += 1
            if got is Phase.SPIN_GLASS_CORRELATED and theta > sigma + step:
                para_glass_off += 1

    # topology: uncorrelated at small sigma / large theta, glass at large sigma / small theta,
    # para in between and bordering both
    def touches(a, b):
        grown = ndimage.binary_dilation(labels == list(Phase).index(a))
        return bool(np.any(grown & (labels == list(Phase).index(b))))

    topo = (
        cells[0, -1].phase is Phase.UNCORRELATED
        and cells[-1, 0].phase is Phase.SPIN_GLASS_CORRELATED
        and touches(Phase.PARACORRELATED, Phase.UNCORRELATED)
        and touches(Phase.PARACORRELATED, Phase.SPIN_GLASS_CORRELATED)
    )

    csv1 = phase_csv_text(points)
    csv2 = phase_csv_text(run_sweep(cfg, threads=1))
    csv4 = phase_csv_text(run_sweep(cfg, threads=4))
    identical = csv1 == csv2 == csv4
    ok = contiguous and topo and mismatches == 0 and para_glass_off == 0 and identical and dt < 10
    criterion(
        8,
        ok,
        f"regions {[regions[p] for p in Phase]} (each 1), topology {topo}, {mismatches} classifier mismatches, "
        f"{para_glass_off} cells off the theta = sigma line, csv identical across runs/threads: {identical}, "
        f"{dt:.1f}s (<10s)",
    )


# 9 --------------------------------------------------------------------------

def _glass_probe(m, theta, seeds):
    runs, cond = [], []
    for s in seeds:
        configs, obs = thermal_sample(m, theta, 1.0, 2000, seed=s, burn_in=500, record_every=5)
        runs.append(configs)
        cond.append(obs.mean_condensate)
    return float(np.mean(cond)), overlap_statistic(runs)


def test_glass_signatures(criterion):
    t0 = time.perf_counter()
    n, sigma = 256, 1.0
    m = sample_goe_couplings(n, sigma, 1.0, 21)
    tc = sigma
    seeds = child_seeds(9, 8)
    c_hot, q_hot = _glass_probe(m, 4 * tc, seeds)
    c_cold, q_cold = _glass_probe(m, 0.25 * tc, seeds)

    waits, taus = [10, 40, 160, 640], [0, 5, 20, 80]
    hot = relax_and_age(m, 4 * tc, 1.0, waits, taus, seed=91, n_histories=256)
    cold = relax_and_age(m, 0.25 * tc, 1.0, waits, taus, seed=92, n_histories=256)
    # collapse: every curve within 3 stderr of the curve pooled over waiting times
    pooled = hot.correlations.mean(axis=0)
    collapse = bool(np.all(np.abs(hot.correlations - pooled)[:, 1:] <= 3 * hot.stderr[:, 1:]))
    ordered = all(np.all(np.diff(cold.correlations[:, k]) > 0) for k in range(1, len(taus)))
    dt = time.perf_counter() - t0
    ok = (
        c_hot < 0.05
        and c_cold > 0.5
        and q_cold.mean > 0.3
        and abs(q_hot.mean) < 5 * q_hot.stderr
        and collapse
        and ordered
        and dt < 600
    )
    criterion(
        9,
        ok,
        f"condensate {c_hot:.3f} (<0.05) / {c_cold:.3f} (>0.5); q {q_cold.mean:.3f} (>0.3) / "
        f"{q_hot.mean:.4f}±{q_hot.stderr:.4f} (<5se); aging collapse above {collapse}, "
        f"t_w-ordered below {ordered}; {dt:.0f}s (<600s)",
    )


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
