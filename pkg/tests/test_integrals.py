from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import erf

from conftest import find_record
from noqe import chem
from noqe.integrals import (
    antisymmetrized_eri,
    boys_f0,
    compute_integrals,
    dump_integrals,
    h_norm_upper,
    load_integrals,
    mo_transform,
)
from noqe.scf import run_scf


def _ints(system, basis, r):
    mol = chem.h2(r) if system == "h2" else chem.h4_square(r)
    return compute_integrals(chem.basis_for(mol, basis), mol)


@given(st.floats(1e-12, 200.0))
def test_boys_matches_error_function(t):
    exact = 0.5 * math.sqrt(math.pi / t) * erf(math.sqrt(t))
    assert boys_f0(t) == pytest.approx(exact, rel=1e-10, abs=1e-14)


def test_boys_at_zero_and_vectorized():
    assert boys_f0(0.0) == 1.0
    out = boys_f0(np.array([0.0, 1e-9, 3.0]))
    assert out.shape == (3,)
    assert out[1] == pytest.approx(1 - 1e-9 / 3)


def test_against_third_party_values(pyscf_records):
    for rec in pyscf_records:
        ints = _ints(rec["system"], rec["basis"], rec["distance"])
        np.testing.assert_allclose(ints.overlap, rec["overlap"], atol=1e-9)
        np.testing.assert_allclose(ints.kinetic, rec["kinetic"], atol=1e-9)
        np.testing.assert_allclose(ints.potential, rec["potential"], atol=1e-9)
        assert ints.e_nuc == pytest.approx(rec["e_nuc"], abs=1e-9)
        assert np.einsum("iijj->", ints.eri) == pytest.approx(rec["eri_trace"], abs=1e-8)


def test_eri_permutational_symmetry():
    eri = _ints("h4", "STO-3G", 1.1).eri
    for perm in [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0)]:
        np.testing.assert_allclose(eri, eri.transpose(perm), atol=1e-13)


def test_overlap_positive_definite():
    ints = _ints("h2", "6-311G", 0.5)
    assert np.all(np.linalg.eigvalsh(ints.overlap) > 0)
    assert ints.overlap_condition() > 1


@pytest.fixture(scope="module")
def h2_mo():
    ints = _ints("h2", "6-31G", 0.75)
    sol = run_scf(ints, None, "restricted", 1, 1)
    return ints, sol, mo_transform(ints, sol.coefficients)


def test_mo_integrals_spin_blocks(h2_mo):
    _, _, mo = h2_mo
    s = mo.spins
    mixed = s[:, None] != s[None, :]
    assert np.all(mo.h[mixed] == 0)
    # <pq|rs> needs spin(p) = spin(r) and spin(q) = spin(s)
    bad = np.broadcast_to(s[:, None, None, None] != s[None, None, :, None], mo.eri.shape)
    assert np.all(mo.eri[bad] == 0)


def test_antisymmetrized_eri(h2_mo):
    _, _, mo = h2_mo
    A = antisymmetrized_eri(mo)
    np.testing.assert_allclose(A, -A.transpose(1, 0, 2, 3), atol=1e-13)
    np.testing.assert_allclose(A, -A.transpose(0, 1, 3, 2), atol=1e-13)
    assert antisymmetrized_eri(mo, 0, 4, 1, 5) == pytest.approx(A[0, 4, 1, 5])
    with pytest.raises(IndexError):
        antisymmetrized_eri(mo, 0, 0, 0, mo.n)
    assert h_norm_upper(mo) >= np.abs(mo.h).sum()


def test_rejects_non_orthonormal(h2_mo):
    ints, sol, _ = h2_mo
    with pytest.raises(ValueError):
        mo_transform(ints, 1.01 * sol.coefficients)


def test_dump_round_trip(tmp_path):
    ints = _ints("h2", "STO-3G", 0.75)
    path = tmp_path / "ints.txt"
    dump_integrals(ints, path)
    back = load_integrals(path)
    np.testing.assert_array_equal(back["S"], ints.overlap)
    np.testing.assert_array_equal(back["ERI"], ints.eri)
    assert back["e_nuc"] == ints.e_nuc
