"""Regenerate the frozen third-party reference values used by the tests.

Requires PySCF, which is deliberately not a dependency of the package: the
values are computed once and stored in ``tests/data/pyscf_reference.json``.

    python scripts/make_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from pyscf import fci, gto, mp, scf

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "pyscf_reference.json"

H2_POINTS = [(basis, r) for basis in ("STO-3G", "6-31G", "6-311G") for r in (0.5, 0.75, 1.2, 2.5)]
H4_POINTS = [("STO-3G", a) for a in (0.8, 1.1, 1.3, 2.0)]


def h2_atoms(r):
    return [("H", (0, 0, 0)), ("H", (0, 0, r))]


def h4_atoms(a):
    # same atom order as noqe.chem.h4_square
    return [("H", (0, 0, 0)), ("H", (a, 0, 0)), ("H", (0, a, 0)), ("H", (a, a, 0))]


def record(system, basis, r, atoms):
    mol = gto.M(atom=atoms, basis=basis.lower(), unit="Angstrom", verbose=0)
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    norb, nelec = mol.nao, mol.nelectron
    h1 = mf.mo_coeff.T @ mf.get_hcore() @ mf.mo_coeff
    eri = mol.ao2mo(mf.mo_coeff)
    solver = fci.direct_spin1.FCI(mol)
    solver.conv_tol = 1e-12
    nroots = min(6, 4 ** norb)
    e, civecs = solver.kernel(h1, eri, norb, (nelec // 2, nelec // 2), ecore=mol.energy_nuc(),
                              nroots=nroots)
    s2 = [fci.spin_op.spin_square(c, norb, (nelec // 2, nelec // 2))[0] for c in civecs]
    return {
        "system": system,
        "basis": basis,
        "distance": r,
        "e_nuc": mol.energy_nuc(),
        "overlap": mol.intor("int1e_ovlp").tolist(),
        "kinetic": mol.intor("int1e_kin").tolist(),
        "potential": mol.intor("int1e_nuc").tolist(),
        "eri_trace": float(np.einsum("iijj->", mol.intor("int2e"))),
        "e_rhf": float(mf.e_tot),
        "e_mp2_corr": float(mp.MP2(mf).run().e_corr),
        "fci_energies": [float(x) for x in e],
        "fci_s2": [float(x) for x in s2],
    }


def main():
    rows = [record("h2", b, r, h2_atoms(r)) for b, r in H2_POINTS]
    rows += [record("h4", b, a, h4_atoms(a)) for b, a in H4_POINTS]
    OUT.write_text(json.dumps(rows, indent=1) + "\n")
    print(f"wrote {len(rows)} records to {OUT}")


if __name__ == "__main__":
    main()
