"""End-to-end evaluation of one geometry: references, correlated states, subspace solve, FCI."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import chem
from .chem import Molecule
from .correlation import ScalingScheme, build_supermatrix, mp2_amplitudes, scale_amplitudes
from .fock import (
    FockVector,
    OrbitalBasis,
    apply_cluster_exact,
    apply_cluster_lowrank,
    build_hamiltonian,
    encode_reference,
    fci_solve,
    s_squared,
    s_squared_operator,
    transform_state,
)
from .integrals import IntegralSet, compute_integrals, mo_transform
from .lowrank import TruncationReport, combine_reports, factorize, truncate
from .scf import ReferenceSet, generate_references
from .solver import NOQEResult, assemble, combine, infidelity, label_states, solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimulationMode:
    """How each reference's cluster unitary is applied.

    ``exact`` exponentiates the generator, ``lowrank`` uses the Trotterized
    double factorization with ``k`` steps after truncating at ``epsilon``,
    and ``noci`` applies no correlation at all.
    """

    kind: str = "exact"
    k: int = 1
    epsilon: float = 0.0
    method: str = "takagi"

    def __post_init__(self):
        if self.kind not in ("exact", "lowrank", "noci"):
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.k < 1 or self.epsilon < 0:
            raise ValueError("Trotter order must be >= 1 and epsilon >= 0")
        if self.method not in ("takagi", "svd"):
            raise ValueError(f"unknown factorization {self.method!r}")

    @classmethod
    def parse(cls, text: str) -> SimulationMode:
        """``exact``, ``noci`` or ``lowrank:k=2,eps=0.024[,method=svd]``."""
        head, _, rest = str(text).strip().partition(":")
        kw = {}
        for item in filter(None, rest.split(",")):
            key, _, val = item.partition("=")
            key = key.strip().lower()
            if key == "k":
                kw["k"] = int(val)
            elif key in ("eps", "epsilon"):
                kw["epsilon"] = float(val)
            elif key == "method":
                kw["method"] = val.strip().lower()
            else:
                raise ValueError(f"unknown mode option {key!r}")
        return cls(head.lower(), **kw)

    def label(self) -> str:
        if self.kind == "lowrank":
            return f"lowrank:k={self.k},eps={self.epsilon:g},method={self.method}"
        return self.kind


def build_system(system: str, distance: float, *, m_s: float = 0.0) -> Molecule:
    """``h2`` (bond length) or ``h4`` (square side), or a geometry file path."""
    key = system.lower()
    if key == "h2":
        return chem.h2(distance, m_s=m_s)
    if key == "h4":
        return chem.h4_square(distance, m_s=m_s)
    path = Path(system)
    if path.exists():
        return chem.read_geometry(path.read_text(), m_s=m_s)
    raise ValueError(f"unknown system {system!r}")


@dataclass
class Prepared:
    """Everything derived from one geometry before choosing a correlation mode."""

    mol: Molecule
    ints: IntegralSet
    refs: ReferenceSet
    bases: list
    amplitudes: list
    hamiltonian: object
    s2_op: object
    order: str = "interleaved"

    @property
    def N(self) -> int:
        return self.bases[0].N


def prepare(mol: Molecule, basis: str, scheme: ScalingScheme | None = None,
            order: str = "interleaved") -> Prepared:
    ints = compute_integrals(chem.basis_for(mol, basis), mol)
    refs = generate_references(ints, mol)
    bases, amps = [], []
    for j, ref in enumerate(refs.references):
        mo = mo_transform(ints, ref.coefficients)
        t = mp2_amplitudes(mo, ref.eps, ref.occupied, reference=j)
        if scheme is not None:
            t = scale_amplitudes(t, scheme)
        amps.append(t)
        bases.append(OrbitalBasis(ref.coefficients, ref.spins, j))
    common = refs.references[0]
    H = build_hamiltonian(mo_transform(ints, common.coefficients), basis=0)
    s2 = s_squared_operator(common.coefficients, ints.overlap, common.spins)
    return Prepared(mol, ints, refs, bases, amps, H, s2, order)


def correlated_states(prep: Prepared, mode: SimulationMode):
    """Correlated references expressed in the first reference's orbitals."""
    states, reports = [], []
    for j, ref in enumerate(prep.refs.references):
        phi = encode_reference(ref.occupation, prep.N, basis=j)
        if mode.kind != "noci":
            sm = build_supermatrix(prep.amplitudes[j], prep.order)
            if mode.kind == "exact":
                phi = apply_cluster_exact(phi, sm)
            else:
                fac = factorize(sm, mode.method)
                fac, rep = truncate(fac, mode.epsilon)
                reports.append(rep)
                phi = apply_cluster_lowrank(phi, fac, mode.k)
        states.append(transform_state(phi, prep.bases[j], prep.bases[0], prep.ints.overlap))
    return states, (combine_reports(reports) if reports else None)


@dataclass(frozen=True)
class FCIStates:
    energies: np.ndarray
    s_squared: np.ndarray
    labels: tuple[str, ...]
    states: tuple[FockVector, ...]

    def energy_of(self, label: str) -> float:
        return float(self.energies[self.labels.index(label)])

    def eigenspace(self, label: str, tol: float = 1e-8) -> list[FockVector]:
        e = self.energy_of(label)
        return [s for s, x in zip(self.states, self.energies) if abs(x - e) < tol]


def fci_states(prep: Prepared, n_states: int | None = None) -> FCIStates:
    mol = prep.mol
    spins = prep.refs.references[0].spins
    res = fci_solve(prep.hamiltonian, mol.n_electrons, mol.m_s, spins)
    K = len(res.energies) if n_states is None else min(n_states, len(res.energies))
    states = tuple(res.state(k) for k in range(K))
    s2 = np.array([s_squared(s, prep.s2_op) for s in states])
    return FCIStates(res.energies[:K], s2, label_states(res.energies[:K], s2), states)


def analyse(prep: Prepared, states, threshold: float, fci: FCIStates | None) -> NOQEResult:
    sm = assemble(states, prep.hamiltonian)
    res = solve(sm, threshold)
    vecs = [combine(states, res.coefficients[:, k]) for k in range(len(res.energies))]
    s2 = np.array([s_squared(v, prep.s2_op) for v in vecs])
    labels = label_states(res.energies, s2)
    infid = {}
    if fci is not None:
        for lab, v in zip(labels, vecs):
            if lab != "contaminated" and lab in fci.labels:
                infid[lab] = infidelity(v, fci.eigenspace(lab))
    return NOQEResult(res.energies, res.coefficients, res.retained, s2, labels, infid)


@dataclass
class PointResult:
    distance: float
    fci: FCIStates | None = None
    noqe: NOQEResult | None = None
    noci: NOQEResult | None = None
    reference_energies: tuple = ()
    reference_s2: tuple = ()
    broken_symmetry: bool = False
    truncation: TruncationReport | None = None
    error: str | None = None
    collapsed: tuple = ()


def run_point(system: str, distance: float, basis: str, *,
              scheme: ScalingScheme | None = None,
              mode: SimulationMode = SimulationMode(),
              threshold: float = 1e-4, m_s: float = 0.0,
              with_noci: bool = True, with_fci: bool = True) -> PointResult:
    """Full evaluation at one geometry; failures are captured in ``error``."""
    try:
        mol = build_system(system, distance, m_s=m_s)
        prep = prepare(mol, basis, scheme)
        fci = fci_states(prep) if with_fci else None
        states, report = correlated_states(prep, mode)
        noqe = analyse(prep, states, threshold, fci)
        noci = None
        if with_noci:
            base, _ = correlated_states(prep, SimulationMode("noci"))
            noci = analyse(prep, base, threshold, fci)
        refs = prep.refs.references
        return PointResult(
            distance, fci, noqe, noci,
            tuple(r.energy for r in refs), tuple(r.s_squared for r in refs),
            refs[0].s_squared > 1e-6, report, None, prep.refs.collapsed,
        )
    except Exception as exc:  # reported per row; the scan continues
        log.error("geometry %.4f failed: %s", distance, exc)
        return PointResult(distance, error=f"{type(exc).__name__}: {exc}")
