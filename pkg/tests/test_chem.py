from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noqe import chem
from noqe.chem import BasisError, GeometryError


def test_angstrom_conversion_factor():
    mol = chem.h2(1.0)
    r = np.linalg.norm(mol.coordinates[1] - mol.coordinates[0])
    assert r == pytest.approx(1.0 / 0.529177210903, rel=1e-14)


def test_h4_square_diagonal_pairs():
    mol = chem.h4_square(1.3)
    xyz = mol.coordinates
    dist = np.linalg.norm(xyz[:, None] - xyz[None], axis=-1)
    side = 1.3 * chem.ANGSTROM_TO_BOHR
    assert dist[0, 3] == pytest.approx(side * np.sqrt(2))
    assert dist[1, 2] == pytest.approx(side * np.sqrt(2))
    assert dist[0, 1] == pytest.approx(side)


def test_electron_counts_and_spin():
    mol = chem.h4_square(1.0, m_s=1.0)
    assert (mol.n_electrons, mol.n_alpha, mol.n_beta, mol.n_radical_sites) == (4, 3, 1, 4)


@pytest.mark.parametrize("m_s", [0.5, 3.0])
def test_incompatible_spin_rejected(m_s):
    with pytest.raises(GeometryError):
        chem.h2(0.75, m_s=m_s)


def test_coincident_atoms_rejected():
    with pytest.raises(GeometryError):
        chem.Molecule.from_symbols(["H", "H"], [[0, 0, 0], [0, 0, 0]])


def test_unknown_element_and_unit():
    with pytest.raises(GeometryError):
        chem.Molecule.from_symbols(["He"], [[0, 0, 0]], m_s=0)
    with pytest.raises(GeometryError):
        chem.Molecule.from_symbols(["H", "H"], [[0, 0, 0], [0, 0, 1]], unit="furlong")


def test_read_geometry_round_trip():
    text = "# square\nangstrom\nH 0 0 0\nH 0.74 0 0  # second\n"
    mol = chem.read_geometry(text)
    assert mol.coordinates[1, 0] == pytest.approx(0.74 * chem.ANGSTROM_TO_BOHR)
    with pytest.raises(GeometryError):
        chem.read_geometry("parsec\nH 0 0 0\n")
    with pytest.raises(GeometryError):
        chem.read_geometry("bohr\nH 0 0\n")


@given(st.floats(0.3, 5.0), st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_nuclear_repulsion_translation_invariant(r, shift):
    mol = chem.h2(r)
    assert chem.nuclear_repulsion(mol.translated(shift)) == pytest.approx(chem.nuclear_repulsion(mol))
    assert chem.nuclear_repulsion(mol) == pytest.approx(chem.BOHR_IN_ANGSTROM / r, rel=1e-12)


@pytest.mark.parametrize("name,n_shells", [("STO-3G", 1), ("6-31G", 2), ("6-311G", 3), ("sto-3g", 1)])
def test_basis_library(name, n_shells):
    basis = chem.basis_for(chem.h2(0.75), name)
    assert basis.n_spatial == 2 * n_shells
    assert basis.N == 4 * n_shells
    for shell in basis.shells:
        assert shell.self_overlap() == pytest.approx(1.0, abs=1e-12)


def test_spin_orbital_index_convention():
    basis = chem.basis_for(chem.h2(0.75), "6-31G")
    for k in range(basis.N):
        p, s = basis.spatial_and_spin(k)
        assert basis.spin_orbital(p, s) == k
    assert basis.spatial_and_spin(basis.n_spatial) == (0, 1)


def test_unknown_basis(tmp_path):
    with pytest.raises(BasisError):
        chem.basis_for(chem.h2(0.75), "cc-pVQZ")


def test_basis_path_environment(tmp_path, monkeypatch):
    lib = tmp_path / "hydrogen.basis"
    lib.write_text("basis STO-3G H 1\nS 1\n 1.0 1.0\nend\n")
    monkeypatch.setenv("NOQE_BASIS_PATH", str(tmp_path))
    basis = chem.basis_for(chem.h2(0.75), "STO-3G")
    assert basis.shells[0].exponents == (1.0,)


def test_malformed_shell_rejected():
    with pytest.raises(BasisError):
        chem.GaussianShell(0, (0.5, 1.0), (1.0, 1.0))
    with pytest.raises(BasisError):
        chem.GaussianShell(0, (1.0,), (1.0,), angular_momentum=1)
