"""Molecular geometry, basis-set loading and AO basis construction.

Only s-type shells on hydrogen-like centres are supported. Lengths are bohr
internally; :data:`BOHR_IN_ANGSTROM` converts at the input boundary.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

BOHR_IN_ANGSTROM = 0.529177210903
ANGSTROM_TO_BOHR = 1.0 / BOHR_IN_ANGSTROM

SUPPORTED_BASES = ("STO-3G", "6-31G", "6-311G")
NUCLEAR_CHARGES = {"H": 1}

ALPHA, BETA = 0, 1


class BasisError(ValueError):
    pass


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    symbol: str
    charge: int
    position: tuple[float, float, float]

    @property
    def xyz(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)


@dataclass(frozen=True)
class Molecule:
    """A set of point nuclei plus total charge and target spin projection.

    ``m_s`` is the half-integer total S_z; it fixes the alpha/beta electron
    counts used by every downstream stage.
    """

    atoms: tuple[Atom, ...]
    charge: int = 0
    m_s: float = 0.0

    def __post_init__(self):
        coords = np.array([a.position for a in self.atoms], dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(coords)):
            raise GeometryError("non-finite atomic position")
        for i, j in itertools.combinations(range(len(self.atoms)), 2):
            if np.linalg.norm(coords[i] - coords[j]) <= 1e-6:
                raise GeometryError(f"atoms {i} and {j} coincide")
        if self.n_electrons < 1:
            raise GeometryError("molecule has no electrons")
        twice = 2 * self.m_s
        if abs(twice - round(twice)) > 1e-12 or (round(twice) - self.n_electrons) % 2:
            raise GeometryError(
                f"m_s={self.m_s} incompatible with {self.n_electrons} electrons"
            )
        if abs(twice) > self.n_electrons:
            raise GeometryError(f"|m_s| too large for {self.n_electrons} electrons")

    @property
    def n_electrons(self) -> int:
        return sum(a.charge for a in self.atoms) - self.charge

    @property
    def n_alpha(self) -> int:
        return (self.n_electrons + round(2 * self.m_s)) // 2

    @property
    def n_beta(self) -> int:
        return self.n_electrons - self.n_alpha

    @property
    def coordinates(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms], dtype=float)

    @property
    def n_radical_sites(self) -> int:
        # every H atom hosts one unpaired electron at dissociation
        return sum(1 for a in self.atoms if a.symbol == "H")

    def translated(self, shift) -> Molecule:
        shift = np.asarray(shift, dtype=float)
        atoms = tuple(
            Atom(a.symbol, a.charge, tuple(a.xyz + shift)) for a in self.atoms
        )
        return Molecule(atoms, self.charge, self.m_s)

    @classmethod
    def from_symbols(cls, symbols, coords, *, unit="bohr", charge=0, m_s=0.0):
        coords = np.asarray(coords, dtype=float).reshape(-1, 3)
        if unit.lower() in ("angstrom", "ang", "a"):
            coords = coords * ANGSTROM_TO_BOHR
        elif unit.lower() != "bohr":
            raise GeometryError(f"unknown length unit {unit!r}")
        atoms = []
        for sym, xyz in zip(symbols, coords):
            sym = sym.capitalize()
            if sym not in NUCLEAR_CHARGES:
                raise GeometryError(f"unsupported element {sym!r}")
            atoms.append(Atom(sym, NUCLEAR_CHARGES[sym], tuple(float(x) for x in xyz)))
        return cls(tuple(atoms), charge, m_s)


def h2(distance: float, unit: str = "angstrom", m_s: float = 0.0) -> Molecule:
    """H2 along z with the given bond length."""
    return Molecule.from_symbols(
        ["H", "H"], [[0, 0, 0], [0, 0, distance]], unit=unit, m_s=m_s
    )


def h4_square(side: float, unit: str = "angstrom", m_s: float = 0.0) -> Molecule:
    """Square H4 in the xy plane, atoms listed row by row.

    With this order atoms (0, 3) and (1, 2) sit on the diagonals.
    """
    coords = [[0, 0, 0], [side, 0, 0], [0, side, 0], [side, side, 0]]
    return Molecule.from_symbols(["H"] * 4, coords, unit=unit, m_s=m_s)


def single_atom(symbol: str = "H", m_s: float = 0.5) -> Molecule:
    return Molecule.from_symbols([symbol], [[0, 0, 0]], m_s=m_s)


def read_geometry(text: str, *, charge: int = 0, m_s: float = 0.0) -> Molecule:
    """Parse ``element x y z`` lines preceded by a unit header line.

    The header is ``angstrom`` or ``bohr``; blank lines and ``#`` comments
    are skipped.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GeometryError("empty geometry")
    unit = lines[0].lower()
    if unit not in ("angstrom", "bohr"):
        raise GeometryError(f"first line must be 'angstrom' or 'bohr', got {lines[0]!r}")
    symbols, coords = [], []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 4:
            raise GeometryError(f"malformed geometry line {ln!r}")
        symbols.append(parts[0])
        coords.append([float(x) for x in parts[1:]])
    return Molecule.from_symbols(symbols, coords, unit=unit, charge=charge, m_s=m_s)


def nuclear_repulsion(mol: Molecule) -> float:
    coords = mol.coordinates
    charges = [a.charge for a in mol.atoms]
    energy = 0.0
    for i, j in itertools.combinations(range(len(charges)), 2):
        r = np.linalg.norm(coords[i] - coords[j])
        if r <= 1e-6:
            raise GeometryError(f"atoms {i} and {j} coincide")
        energy += charges[i] * charges[j] / r
    return float(energy)


def primitive_norm(exponent):
    """Normalization constant of an s-type primitive exp(-a r^2)."""
    return (2.0 * np.asarray(exponent) / math.pi) ** 0.75


@dataclass(frozen=True)
class GaussianShell:
    """Contracted s shell. Coefficients multiply normalized primitives."""

    center: int
    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]
    angular_momentum: int = 0

    def __post_init__(self):
        if self.angular_momentum != 0:
            raise BasisError("only s-type shells are supported")
        exps = np.asarray(self.exponents)
        if len(exps) == 0 or len(exps) != len(self.coefficients):
            raise BasisError("exponent/coefficient length mismatch")
        if np.any(exps <= 0):
            raise BasisError("exponents must be positive")
        if np.any(np.diff(exps) >= 0):
            raise BasisError("exponents must be strictly decreasing")

    @property
    def normalized_coefficients(self) -> np.ndarray:
        """Coefficients on raw primitives giving a unit-norm contraction."""
        a = np.asarray(self.exponents)
        d = np.asarray(self.coefficients) * primitive_norm(a)
        p = a[:, None] + a[None, :]
        self_overlap = d @ ((math.pi / p) ** 1.5) @ d
        return d / math.sqrt(self_overlap)

    def self_overlap(self) -> float:
        a = np.asarray(self.exponents)
        d = self.normalized_coefficients
        p = a[:, None] + a[None, :]
        return float(d @ ((math.pi / p) ** 1.5) @ d)


@dataclass(frozen=True)
class ShellTemplate:
    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]
    angular_momentum: int = 0


@dataclass(frozen=True)
class AOBasis:
    """Atom-centred spatial basis plus the spin-orbital index convention.

    Spin-orbital ``k`` is spatial orbital ``k % n_spatial`` with spin
    ``k // n_spatial``: all alpha orbitals first, then all beta.
    """

    shells: tuple[GaussianShell, ...]
    centers: np.ndarray = field(repr=False)
    name: str = ""

    @property
    def n_spatial(self) -> int:
        return len(self.shells)

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n_spatial

    N = n_spin_orbitals

    def spin_orbital(self, spatial: int, spin: int) -> int:
        if not 0 <= spatial < self.n_spatial or spin not in (ALPHA, BETA):
            raise IndexError((spatial, spin))
        return spin * self.n_spatial + spatial

    def spatial_and_spin(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.n_spin_orbitals:
            raise IndexError(index)
        return index % self.n_spatial, index // self.n_spatial

    @property
    def shell_centers(self) -> np.ndarray:
        return np.array([s.center for s in self.shells])


def default_basis_path() -> Path:
    env = os.environ.get("NOQE_BASIS_PATH")
    if env:
        path = Path(env)
        return path / "hydrogen.basis" if path.is_dir() else path
    return Path(str(resources.files("noqe") / "data" / "hydrogen.basis"))


def _canonical_name(name: str) -> str:
    for known in SUPPORTED_BASES:
        if name.strip().upper() == known.upper():
            return known
    raise BasisError(f"unknown basis set {name!r}; expected one of {SUPPORTED_BASES}")


def load_basis_library(path=None, name: str = "STO-3G") -> dict[str, list[ShellTemplate]]:
    """Read the shell templates of basis ``name`` from a library file."""
    name = _canonical_name(name)
    path = Path(path) if path is not None else default_basis_path()
    if path.is_dir():
        path = path / "hydrogen.basis"
    lines = [ln.split("#", 1)[0].strip() for ln in path.read_text().splitlines()]
    lines = [ln for ln in lines if ln]

    library: dict[str, list[ShellTemplate]] = {}
    i = 0
    while i < len(lines):
        head = lines[i].split()
        if head[0].lower() != "basis" or len(head) != 4:
            raise BasisError(f"malformed record header {lines[i]!r}")
        rec_name, element, n_shells = head[1], head[2].capitalize(), int(head[3])
        i += 1
        shells = []
        for _ in range(n_shells):
            sh = lines[i].split()
            if len(sh) != 2:
                raise BasisError(f"malformed shell header {lines[i]!r}")
            if sh[0].upper() != "S":
                raise BasisError(f"unsupported shell type {sh[0]!r}")
            n_prim = int(sh[1])
            rows = [lines[i + 1 + k].split() for k in range(n_prim)]
            if any(len(r) != 2 for r in rows):
                raise BasisError("malformed primitive line")
            exps = tuple(float(r[0]) for r in rows)
            coefs = tuple(float(r[1]) for r in rows)
            shells.append(ShellTemplate(exps, coefs))
            i += 1 + n_prim
        if lines[i].lower() != "end":
            raise BasisError(f"expected 'end', got {lines[i]!r}")
        i += 1
        if rec_name.upper() == name.upper():
            library[element] = shells
    if not library:
        raise BasisError(f"basis {name!r} not found in {path}")
    return library


def build_ao_basis(mol: Molecule, library: dict[str, list[ShellTemplate]], name="") -> AOBasis:
    shells = []
    for idx, atom in enumerate(mol.atoms):
        if atom.symbol not in library:
            raise BasisError(f"element {atom.symbol!r} missing from basis library")
        for tpl in library[atom.symbol]:
            shells.append(
                GaussianShell(idx, tpl.exponents, tpl.coefficients, tpl.angular_momentum)
            )
    return AOBasis(tuple(shells), mol.coordinates, name)


def basis_for(mol: Molecule, name: str) -> AOBasis:
    return build_ao_basis(mol, load_basis_library(None, name), _canonical_name(name))
