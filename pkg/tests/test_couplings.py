import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavssk import CouplingMatrix, DomainError, EnsembleSpec, estimate_sigma, sample_dipole_couplings, sample_goe_couplings
from cavssk.couplings import (
    FixedAxis,
    LognormalMagnitude,
    read_matrix,
    read_matrix_csv,
    semicircle_ks,
    write_matrix,
    write_matrix_csv,
)


def test_matrix_validation():
    with pytest.raises(DomainError):
        CouplingMatrix(np.ones((2, 3)))
    with pytest.raises(DomainError):
        CouplingMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(DomainError):
        CouplingMatrix(np.eye(2))


def test_entries_read_only():
    m = sample_goe_couplings(4, 1.0, 1.0, 0)
    with pytest.raises(ValueError):
        m.entries[0, 1] = 5.0


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 40), sigma=st.floats(0.0, 5.0), eps=st.floats(0.0, 1.0), seed=st.integers(0, 2**32))
def test_goe_structure_and_determinism(n, sigma, eps, seed):
    a = sample_goe_couplings(n, sigma, eps, seed)
    b = sample_goe_couplings(n, sigma, eps, seed)
    assert np.array_equal(a.entries, b.entries)
    assert np.array_equal(a.entries, a.entries.T)
    assert not np.any(np.diag(a.entries))
    assert a.meta["model"] == "goe"


def test_goe_variance_convention():
    m = sample_goe_couplings(400, 0.7, 0.5, 3)
    est = estimate_sigma(m, eps=0.5)
    assert abs(est.value - 0.7) < 4 * est.stderr
    assert est.stderr < 0.01


def test_goe_rejects_bad_args():
    for args in [(1, 1.0, 1.0, 0), (4, -1.0, 1.0, 0), (4, 1.0, 1.5, 0)]:
        with pytest.raises(DomainError):
            sample_goe_couplings(*args)


def test_sigma_zero_is_zero_matrix():
    m = sample_goe_couplings(10, 0.0, 1.0, 1)
    assert not np.any(m.entries)
    assert estimate_sigma(m) == (0.0, 0.0)


def test_semicircle_at_moderate_n():
    m = sample_goe_couplings(600, 1.0, 1.0, 11)
    ev = m.spectrum[0]
    assert semicircle_ks(ev, 2 * 600) < 0.05
    assert 0.93 < ev.max() / 1200 < 1.02


def test_dipole_rank_one_structure():
    spec = EnsembleSpec(3, 4, lam=0.5, seed=9)
    m = sample_dipole_couplings(spec)
    assert m.dim == 12
    assert m.meta["spec_hash"] == spec.digest()
    full = m.entries - np.diag(np.diag(m.entries))
    assert np.array_equal(full, full.T)
    # off-diagonal part of -lam^2 d d^T: every 2x2 minor off the diagonal vanishes
    i, j, k, l = 0, 1, 2, 3
    assert m.entries[i, k] * m.entries[j, l] == pytest.approx(m.entries[i, l] * m.entries[j, k])


def test_dipole_fixed_axis_is_constant_block():
    spec = EnsembleSpec(2, 2, lam=1.0, orientation=FixedAxis(0.0))
    off = sample_dipole_couplings(spec).offdiagonal()
    assert np.allclose(off, -1.0)


def test_dipole_digest_tracks_ensemble():
    a = EnsembleSpec(2, 2, dipole_magnitude=LognormalMagnitude(0.0, 0.3))
    b = EnsembleSpec(2, 2, dipole_magnitude=LognormalMagnitude(0.0, 0.4))
    assert a.digest() != b.digest()
    assert a.digest() == EnsembleSpec(2, 2, dipole_magnitude=LognormalMagnitude(0.0, 0.3)).digest()


def test_dipole_rejects_bad_ensemble():
    with pytest.raises(DomainError):
        EnsembleSpec(0, 2)
    with pytest.raises(DomainError):
        EnsembleSpec(2, 2, lam=-1.0)


def test_binary_round_trip(tmp_path):
    m = sample_goe_couplings(17, 1.3, 0.8, 5)
    p = tmp_path / "j.bin"
    write_matrix(m, p)
    back = read_matrix(p)
    assert np.array_equal(back.entries, m.entries)
    assert back.meta == m.meta


def test_binary_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"nope" + bytes(40))
    with pytest.raises(DomainError):
        read_matrix(p)


def test_csv_round_trip(tmp_path):
    m = sample_dipole_couplings(EnsembleSpec(2, 3, seed=2))
    p = tmp_path / "j.csv"
    write_matrix_csv(m, p)
    assert np.array_equal(read_matrix_csv(p).entries, m.entries)
