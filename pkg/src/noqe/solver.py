"""Generalized eigenproblem over non-orthogonal correlated references."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fock import FockOperator, FockVector, matrix_elements

OVERLAP_THRESHOLD = 1e-4
LABEL_TOL = 0.1
SPIN_CLASSES = {0: "S", 1: "T", 2: "Q"}


class EmptySubspace(ValueError):
    pass


class MissingState(KeyError):
    pass


@dataclass(frozen=True)
class SubspaceMatrices:
    H: np.ndarray
    S: np.ndarray
    provenance: tuple = ()

    @property
    def M(self) -> int:
        return self.H.shape[0]

    def hermiticity_error(self) -> float:
        return float(max(np.max(np.abs(self.H - self.H.conj().T)),
                         np.max(np.abs(self.S - self.S.conj().T))))


def assemble(states: list[FockVector], H: FockOperator, provenance: str = "exact",
             *, symmetrize: bool = False) -> SubspaceMatrices:
    """``H_IJ = <psi_I|H|psi_J>`` and ``S_IJ = <psi_I|psi_J>`` for states in one basis.

    Every element is computed independently; ``symmetrize`` averages each
    pair with its mirror afterwards.
    """
    M = len(states)
    Hm = np.zeros((M, M), dtype=complex)
    Sm = np.zeros((M, M), dtype=complex)
    Hpsi = [H.apply(s) for s in states]
    for i in range(M):
        for j in range(M):
            Sm[i, j] = states[i].inner(states[j])
            Hm[i, j] = np.vdot(states[i].amplitudes, Hpsi[j].amplitudes)
    if symmetrize:
        Hm = 0.5 * (Hm + Hm.conj().T)
        Sm = 0.5 * (Sm + Sm.conj().T)
    return SubspaceMatrices(Hm, Sm, tuple([provenance] * (M * M)))


def assemble_pairwise(pairs, M: int, provenance: str = "exact") -> SubspaceMatrices:
    """Build matrices from a callable ``pairs(I, J) -> (H_IJ, S_IJ)``."""
    Hm = np.zeros((M, M), dtype=complex)
    Sm = np.zeros((M, M), dtype=complex)
    for i in range(M):
        for j in range(M):
            Hm[i, j], Sm[i, j] = pairs(i, j)
    return SubspaceMatrices(Hm, Sm, tuple([provenance] * (M * M)))


def _fix_phase(c: np.ndarray) -> np.ndarray:
    c = c.copy()
    for k in range(c.shape[1]):
        col = c[:, k]
        big = np.max(np.abs(col))
        idx = int(np.argmax(np.abs(col) > big - 1e-8))
        c[:, k] = col * (abs(col[idx]) / col[idx])
    return c


@dataclass(frozen=True)
class NOQEResult:
    energies: np.ndarray
    coefficients: np.ndarray  # M x K, columns normalized so c^dagger S c = 1
    retained: int
    s_squared: np.ndarray = field(default_factory=lambda: np.zeros(0))
    labels: tuple[str, ...] = ()
    infidelities: dict = field(default_factory=dict)

    def energy_of(self, label: str) -> float:
        try:
            return float(self.energies[self.labels.index(label)])
        except ValueError as exc:
            raise MissingState(label) from exc


def solve(sm: SubspaceMatrices, overlap_threshold: float = OVERLAP_THRESHOLD) -> NOQEResult:
    """Canonical orthogonalization followed by an ordinary Hermitian eigenproblem."""
    S = 0.5 * (sm.S + sm.S.conj().T)
    H = 0.5 * (sm.H + sm.H.conj().T)
    s, U = np.linalg.eigh(S)
    keep = s > overlap_threshold
    if not keep.any():
        raise EmptySubspace("no overlap eigenvalue above the threshold")
    X = U[:, keep] / np.sqrt(s[keep])
    w, y = np.linalg.eigh(X.conj().T @ H @ X)
    c = _fix_phase(X @ y)
    return NOQEResult(w, c, int(keep.sum()))


def combine(states: list[FockVector], c: np.ndarray) -> FockVector:
    amps = sum(ci * st.amplitudes for ci, st in zip(c, states))
    return states[0].with_amplitudes(amps)


def infidelity(psi: FockVector, target: FockVector | list[FockVector]) -> float:
    """``1 - |<psi|target>|^2``; a list of targets spans a degenerate eigenspace."""
    targets = target if isinstance(target, list) else [target]
    total = 0.0
    n_psi = psi.norm
    for t in targets:
        if t.N != psi.N:
            raise ValueError("states belong to different Fock spaces")
        total += abs(np.vdot(t.amplitudes, psi.amplitudes)) ** 2 / (n_psi**2 * t.norm**2)
    if not any(set(psi.weights()) & set(t.weights()) for t in targets) and psi.norm > 0:
        raise ValueError("states live in different particle sectors")
    return float(min(1.0, max(0.0, 1.0 - total)))


def spin_label(s2: float, tol: float = LABEL_TOL) -> str | None:
    """Spin class letter when ``<S^2>`` is within ``tol`` of some ``S(S+1)``."""
    S = 0.5 * (np.sqrt(1 + 4 * max(s2, 0.0)) - 1)
    S_round = round(2 * S) / 2
    if abs(s2 - S_round * (S_round + 1)) < tol and S_round == int(S_round) and int(S_round) in SPIN_CLASSES:
        return SPIN_CLASSES[int(S_round)]
    return None


def label_states(energies, s2_values, tol: float = LABEL_TOL) -> tuple[str, ...]:
    """Labels ``S0, S1, ...``, ``T1, T2, ...``, ``Q1, ...`` in ascending energy.

    States whose ``<S^2>`` is not within ``tol`` of a pure value are labeled
    ``contaminated``.
    """
    order = np.argsort(energies, kind="stable")
    counts = {"S": 0, "T": 1, "Q": 1}
    labels = [""] * len(order)
    for k in order:
        cls = spin_label(float(s2_values[k]), tol)
        if cls is None:
            labels[k] = "contaminated"
        else:
            labels[k] = f"{cls}{counts[cls]}"
            counts[cls] += 1
    return tuple(labels)


def spin_gap(result: NOQEResult, labels=None) -> float:
    """Signed singlet-triplet gap ``E(T1) - E(S0)``."""
    labels = labels if labels is not None else result.labels
    if "S0" not in labels or "T1" not in labels:
        raise MissingState("both S0 and T1 are required for the gap")
    return float(result.energies[labels.index("T1")] - result.energies[labels.index("S0")])
