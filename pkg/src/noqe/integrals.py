"""Closed-form integrals over contracted s-type Gaussians and MO transforms.

AO electron-repulsion integrals are stored in chemists' order ``(pq|rs)``.
After :func:`mo_transform` the spin-orbital tensor is in physicists' order,
``g[p, q, r, s] = <pq|rs> = (pr|qs)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .chem import AOBasis, Molecule, nuclear_repulsion

BOYS_CROSSOVER = 1e-6


def boys_f0(t):
    """Zeroth-order Boys function F0(t) = int_0^1 exp(-t u^2) du."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("Boys function argument must be nonnegative")
    small = t < BOYS_CROSSOVER
    safe = np.where(small, 1.0, t)
    large = 0.5 * np.sqrt(np.pi / safe) * erf(np.sqrt(safe))
    series = 1.0 - t / 3.0 + t * t / 10.0
    out = np.where(small, series, large)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class IntegralSet:
    overlap: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray
    eri: np.ndarray
    e_nuc: float
    dipole: np.ndarray  # (3, n, n) position integrals <mu|r|nu>
    ao_centers: np.ndarray  # atom index per AO

    @property
    def hcore(self) -> np.ndarray:
        return self.kinetic + self.potential

    @property
    def n(self) -> int:
        return self.overlap.shape[0]

    def overlap_condition(self) -> float:
        w = np.linalg.eigvalsh(self.overlap)
        return float(w[-1] / w[0])


def _primitive_table(basis: AOBasis):
    exps, coefs, owner, centers = [], [], [], []
    for k, shell in enumerate(basis.shells):
        d = shell.normalized_coefficients
        for a, c in zip(shell.exponents, d):
            exps.append(a)
            coefs.append(c)
            owner.append(k)
            centers.append(basis.centers[shell.center])
    return (np.array(exps), np.array(coefs), np.array(owner), np.array(centers))


def _contract2(prim, owner, n):
    out = np.zeros((n, n) + prim.shape[2:])
    np.add.at(out, (owner[:, None], owner[None, :]), prim)
    return out


def compute_integrals(basis: AOBasis, mol: Molecule) -> IntegralSet:
    for shell in basis.shells:
        if shell.angular_momentum != 0:
            raise ValueError("unsupported angular momentum")
    a, d, owner, A = _primitive_table(basis)
    n = basis.n_spatial

    p = a[:, None] + a[None, :]
    mu = a[:, None] * a[None, :] / p
    ab2 = np.sum((A[:, None, :] - A[None, :, :]) ** 2, axis=-1)
    K = np.exp(-mu * ab2)
    P = (a[:, None, None] * A[:, None, :] + a[None, :, None] * A[None, :, :]) / p[..., None]
    dd = d[:, None] * d[None, :]

    s_prim = (math.pi / p) ** 1.5 * K
    t_prim = mu * (3.0 - 2.0 * mu * ab2) * s_prim
    v_prim = np.zeros_like(s_prim)
    for atom in mol.atoms:
        pc2 = np.sum((P - atom.xyz) ** 2, axis=-1)
        v_prim -= atom.charge * 2.0 * math.pi / p * K * boys_f0(p * pc2)
    r_prim = np.moveaxis(P, -1, 0) * s_prim

    S = _contract2(dd * s_prim, owner, n)
    T = _contract2(dd * t_prim, owner, n)
    V = _contract2(dd * v_prim, owner, n)
    R = np.stack([_contract2(dd * r, owner, n) for r in r_prim])

    # (ij|kl) over primitive pairs
    pq = p[:, :, None, None] * p[None, None, :, :]
    psum = p[:, :, None, None] + p[None, None, :, :]
    PQ2 = np.sum((P[:, :, None, None, :] - P[None, None, :, :, :]) ** 2, axis=-1)
    g = (
        2.0 * math.pi**2.5 / (pq * np.sqrt(psum))
        * K[:, :, None, None] * K[None, None, :, :]
        * boys_f0(pq / psum * PQ2)
    )
    g *= dd[:, :, None, None] * dd[None, None, :, :]
    eri = np.zeros((n, n, n, n))
    np.add.at(
        eri,
        (owner[:, None, None, None], owner[None, :, None, None],
         owner[None, None, :, None], owner[None, None, None, :]),
        g,
    )
    return IntegralSet(
        overlap=S, kinetic=T, potential=V, eri=eri,
        e_nuc=nuclear_repulsion(mol), dipole=R,
        ao_centers=basis.shell_centers,
    )


@dataclass(frozen=True)
class MOIntegrals:
    """Spin-orbital integrals in one orthonormal orbital basis.

    ``spins[p]`` is 0 (alpha) or 1 (beta). ``eri`` is physicists' ``<pq|rs>``.
    """

    h: np.ndarray
    eri: np.ndarray
    spins: np.ndarray
    e_nuc: float

    @property
    def n(self) -> int:
        return self.h.shape[0]


def orthonormality_error(S_A: np.ndarray, C: np.ndarray, spins: np.ndarray) -> float:
    err = 0.0
    for sigma in (0, 1):
        cols = C[:, spins == sigma]
        if cols.size:
            m = cols.T @ S_A @ cols
            err = max(err, float(np.max(np.abs(m - np.eye(m.shape[0])))))
    return err


def mo_transform(ints: IntegralSet, C: np.ndarray, spins=None, tol: float = 1e-10) -> MOIntegrals:
    """Transform AO integrals to the spin-orbitals given by the columns of ``C``.

    ``C`` is ``n x N``; by default the first ``N/2`` columns are alpha and the
    rest beta. Spin-mixing blocks are zero by construction.
    """
    C = np.asarray(C, dtype=float)
    N = C.shape[1]
    if spins is None:
        spins = np.repeat([0, 1], N // 2)
    spins = np.asarray(spins)
    err = orthonormality_error(ints.overlap, C, spins)
    if err > tol:
        raise ValueError(f"coefficients not S_A-orthonormal (max deviation {err:.2e})")
    h = C.T @ ints.hcore @ C
    same = spins[:, None] == spins[None, :]
    h = np.where(same, h, 0.0)
    chem = np.einsum("up,vq,uvwx,wr,xs->pqrs", C, C, ints.eri, C, C, optimize=True)
    chem = chem * same[:, :, None, None] * same[None, None, :, :]
    phys = chem.transpose(0, 2, 1, 3).copy()
    return MOIntegrals(h=h, eri=phys, spins=spins, e_nuc=ints.e_nuc)


def antisymmetrized_eri(mo: MOIntegrals, i=None, j=None, a=None, b=None):
    """<ij||ab> = <ij|ab> - <ij|ba>; full tensor when no indices are given."""
    g = mo.eri
    if i is None:
        return g - g.transpose(0, 1, 3, 2)
    n = mo.n
    for k in (i, j, a, b):
        if not 0 <= k < n:
            raise IndexError(f"spin-orbital index {k} out of range 0..{n - 1}")
    return g[i, j, a, b] - g[i, j, b, a]


def h_norm_upper(mo: MOIntegrals) -> float:
    """Cheap upper bound |E_nuc| + sum|h_pq| + sum|h_pqrs| on the Hamiltonian norm."""
    return float(abs(mo.e_nuc) + np.abs(mo.h).sum() + np.abs(0.5 * mo.eri).sum())


def dump_integrals(ints: IntegralSet, path) -> None:
    """Write integrals as ``name i j [k l] value`` lines, 17 significant digits."""
    n = ints.n
    out = [f"n {n}", f"e_nuc {ints.e_nuc:.17g}"]
    for name, mat in (("S", ints.overlap), ("T", ints.kinetic), ("V", ints.potential)):
        for i in range(n):
            for j in range(n):
                out.append(f"{name} {i} {j} {mat[i, j]:.17g}")
    for idx in np.ndindex(*ints.eri.shape):
        out.append("ERI " + " ".join(map(str, idx)) + f" {ints.eri[idx]:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def load_integrals(path) -> dict[str, np.ndarray]:
    data: dict = {}
    with open(path) as fh:
        lines = fh.read().split("\n")
    n = int(lines[0].split()[1])
    data["e_nuc"] = float(lines[1].split()[1])
    for key in ("S", "T", "V"):
        data[key] = np.zeros((n, n))
    data["ERI"] = np.zeros((n,) * 4)
    for ln in lines[2:]:
        if not ln:
            continue
        parts = ln.split()
        idx = tuple(int(x) for x in parts[1:-1])
        data[parts[0]][idx] = float(parts[-1])
    return data
