"""Jordan-Wigner statevector simulator for number-conserving fermionic operators.

Qubit ``p`` holds spin-orbital ``p``; a basis state is an integer whose set
bits are the occupied spin-orbitals. The determinant for occupied orbitals
``j_1 < ... < j_k`` is ``a+_{j_1} ... a+_{j_k} |vac>`` so that ``a+_p`` picks
up the sign ``(-1)^(number of occupied orbitals below p)``.

Every operator here conserves particle number, so operators are stored as
dense matrices on fixed-weight sectors and built on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import combinations
from typing import Callable

import numpy as np
import scipy.linalg

from .correlation import ClusterSupermatrix
from .integrals import MOIntegrals
from .lowrank import Factorization, SquareTerm

HERMITIAN_TOL = 1e-10


class BasisMismatch(ValueError):
    pass


# ----------------------------------------------------------------------------
# sectors


@dataclass(frozen=True)
class Sector:
    N: int
    eta: int
    dets: np.ndarray  # ascending integers of popcount eta
    occ: np.ndarray  # (D, N) 0/1 occupation table
    occ_lists: np.ndarray  # (D, eta) occupied orbitals, ascending
    index: np.ndarray  # 2^N -> position in dets or -1

    @property
    def dim(self) -> int:
        return len(self.dets)


@lru_cache(maxsize=None)
def sector(N: int, eta: int) -> Sector:
    if not 0 <= eta <= N:
        raise ValueError(f"no sector with {eta} particles in {N} modes")
    combos = list(combinations(range(N), eta))
    lists = np.array(combos, dtype=int).reshape(len(combos), eta)
    dets = np.array([sum(1 << int(p) for p in row) for row in lists], dtype=np.int64)
    order = np.argsort(dets)
    dets, lists = dets[order], lists[order]
    occ = ((dets[:, None] >> np.arange(N)[None, :]) & 1).astype(np.int8)
    index = -np.ones(1 << N, dtype=np.int64)
    index[dets] = np.arange(len(dets))
    return Sector(N, eta, dets, occ, lists, index)


def _parity_below(x: int, p: int) -> int:
    return bin(x & ((1 << p) - 1)).count("1") & 1


@lru_cache(maxsize=None)
def excitation_matrices(N: int, eta: int) -> np.ndarray:
    """``E[p, q]`` is the sector matrix of ``a+_p a_q``; shape ``(N, N, D, D)``."""
    sec = sector(N, eta)
    D = sec.dim
    E = np.zeros((N, N, D, D))
    for col, x in enumerate(sec.dets):
        x = int(x)
        for q in range(N):
            if not (x >> q) & 1:
                continue
            y = x ^ (1 << q)
            s_q = _parity_below(x, q)
            for p in range(N):
                if (y >> p) & 1:
                    continue
                z = y | (1 << p)
                sign = -1.0 if (s_q + _parity_below(y, p)) & 1 else 1.0
                E[p, q, sec.index[z], col] = sign
    E.setflags(write=False)
    return E


def rotation_matrix(B: np.ndarray, eta: int) -> np.ndarray:
    """Sector matrix of the orbital rotation ``a+_q -> sum_p B[p, q] a+_p``.

    Entries are the minors ``det(B[I, J])`` of the occupied index lists.
    """
    N = B.shape[0]
    sec = sector(N, eta)
    if eta == 0:
        return np.ones((1, 1), dtype=complex)
    rows = sec.occ_lists
    sub = B[rows[:, None, :, None], rows[None, :, None, :]]
    return np.linalg.det(sub)


# ----------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class FockVector:
    """Full ``2^N`` amplitude vector tagged with the orbital basis it refers to."""

    amplitudes: np.ndarray
    N: int
    basis: object = None

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.N,):
            raise ValueError("amplitude vector has the wrong length")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def weights(self) -> list[int]:
        """Particle numbers carrying nonzero amplitude."""
        nz = np.flatnonzero(np.abs(self.amplitudes) > 0)
        return sorted({bin(int(x)).count("1") for x in nz})

    def sector_part(self, eta: int) -> np.ndarray:
        return self.amplitudes[sector(self.N, eta).dets]

    def with_amplitudes(self, amps, basis=None) -> FockVector:
        return FockVector(np.asarray(amps, dtype=complex), self.N,
                          self.basis if basis is None else basis)

    def relabel(self, basis) -> FockVector:
        return replace(self, basis=basis)

    def inner(self, other: FockVector) -> complex:
        check_same_basis(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def map_sectors(self, fn: Callable[[int, np.ndarray], np.ndarray], basis=None) -> FockVector:
        out = np.zeros_like(self.amplitudes, dtype=complex)
        for eta in self.weights():
            dets = sector(self.N, eta).dets
            out[dets] = fn(eta, self.amplitudes[dets])
        return self.with_amplitudes(out, basis)


def check_same_basis(a: FockVector, b: FockVector) -> None:
    if a.N != b.N:
        raise BasisMismatch("states live on different numbers of modes")
    if a.basis != b.basis:
        raise BasisMismatch(f"states expressed in different bases: {a.basis!r} vs {b.basis!r}")


def encode_reference(occupation: int, N: int, eta: int | None = None, basis=None) -> FockVector:
    """Computational basis state with the bits of ``occupation`` set."""
    occupation = int(occupation)
    if occupation < 0 or occupation >= 1 << N:
        raise ValueError("occupation mask does not fit in N modes")
    if eta is not None and bin(occupation).count("1") != eta:
        raise ValueError(f"occupation mask has weight {bin(occupation).count('1')}, expected {eta}")
    amps = np.zeros(1 << N, dtype=complex)
    amps[occupation] = 1.0
    return FockVector(amps, N, basis)


def bitstring(x: int, N: int) -> str:
    """Qubit string with qubit 0 leftmost."""
    return "".join(str((x >> p) & 1) for p in range(N))


# ----------------------------------------------------------------------------
# operators


class FockOperator:
    """Number-conserving operator given by per-sector dense matrices.

    ``kind`` is one of ``"hermitian"``, ``"antihermitian"``, ``"unitary"`` or
    ``"general"``; ``provenance`` records what the operator represents.
    """

    def __init__(self, N: int, builder: Callable[[int], np.ndarray], kind: str = "general",
                 provenance: str = ""):
        self.N = N
        self._builder = builder
        self.kind = kind
        self.provenance = provenance
        self._cache: dict[int, np.ndarray] = {}

    def matrix(self, eta: int) -> np.ndarray:
        if eta not in self._cache:
            m = self._builder(eta)
            if self.kind == "hermitian" and np.max(np.abs(m - m.conj().T), initial=0) > HERMITIAN_TOL:
                raise ValueError(f"{self.provenance or 'operator'} is not Hermitian")
            if self.kind == "antihermitian" and np.max(np.abs(m + m.conj().T), initial=0) > HERMITIAN_TOL:
                raise ValueError(f"{self.provenance or 'operator'} is not anti-Hermitian")
            self._cache[eta] = m
        return self._cache[eta]

    def apply(self, vec: FockVector) -> FockVector:
        if vec.N != self.N:
            raise ValueError("operator and state sizes differ")
        return vec.map_sectors(lambda eta, v: self.matrix(eta) @ v)

    __matmul__ = apply

    def expectation(self, vec: FockVector) -> complex:
        return complex(np.vdot(vec.amplitudes, self.apply(vec).amplitudes))

    def exponential(self, scale: complex = 1.0, kind: str = "unitary", provenance: str = "") -> FockOperator:
        return FockOperator(self.N, lambda eta: scipy.linalg.expm(scale * self.matrix(eta)), kind,
                            provenance or f"exp({self.provenance})")

    def adjoint(self) -> FockOperator:
        kind = self.kind
        return FockOperator(self.N, lambda eta: self.matrix(eta).conj().T, kind,
                            f"adjoint({self.provenance})")

    def to_sparse(self):
        """Assemble the full ``2^N x 2^N`` sparse matrix."""
        import scipy.sparse as sp

        rows, cols, vals = [], [], []
        for eta in range(self.N + 1):
            m = self.matrix(eta)
            dets = sector(self.N, eta).dets
            r, c = np.nonzero(m)
            rows.append(dets[r])
            cols.append(dets[c])
            vals.append(m[r, c])
        dim = 1 << self.N
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
        )


def one_body_operator(h: np.ndarray, kind: str = "general", provenance: str = "one-body") -> FockOperator:
    h = np.asarray(h)
    N = h.shape[0]

    def build(eta):
        E = excitation_matrices(N, eta)
        return np.einsum("pq,pqxy->xy", h, E)

    return FockOperator(N, build, kind, provenance)


def number_operator(N: int) -> FockOperator:
    return one_body_operator(np.eye(N), "hermitian", "number")


def build_hamiltonian(mo: MOIntegrals, basis=None) -> FockOperator:
    """Electronic Hamiltonian plus nuclear repulsion.

    ``H = E_nuc + sum h[p,q] a+_p a_q + 1/2 sum <pq|rs> a+_p a+_q a_s a_r``.
    """
    h, g = mo.h, mo.eri
    if np.max(np.abs(h - h.conj().T)) > HERMITIAN_TOL:
        raise ValueError("one-electron integrals are not Hermitian")
    if np.max(np.abs(g - g.transpose(2, 3, 0, 1).conj())) > HERMITIAN_TOL:
        raise ValueError("two-electron integrals are not Hermitian")
    N = mo.n

    def build(eta):
        E = excitation_matrices(N, eta)
        D = E.shape[-1]
        out = mo.e_nuc * np.eye(D) + np.einsum("pq,pqxy->xy", h, E)
        if eta >= 2:
            # a+_p a+_q a_s a_r = E_pr E_qs - delta_qr E_ps
            F = np.einsum("pqrs,qsxy->prxy", g, E, optimize=True)
            two = np.einsum("prxy,pryz->xz", E, F, optimize=True)
            two -= np.einsum("pqqs,psxy->xy", g, E, optimize=True)
            out = out + 0.5 * two
        return out

    op = FockOperator(N, build, "hermitian", "hamiltonian")
    op.basis = basis
    return op


# ----------------------------------------------------------------------------
# orbital rotations


def _block_diagonal_check(B, spins):
    if spins is None:
        return
    spins = np.asarray(spins)
    off = spins[:, None] != spins[None, :]
    if np.max(np.abs(B[off]), initial=0) > 1e-12:
        raise ValueError("rotation mixes spin blocks")


def apply_orbital_rotation(vec: FockVector, B: np.ndarray, basis=None) -> FockVector:
    """Apply the rotation ``a+_q -> sum_p B[p, q] a+_p`` (``B`` unitary)."""
    B = np.asarray(B)
    if B.shape != (vec.N, vec.N):
        raise ValueError("rotation matrix size does not match the state")
    if np.max(np.abs(B.conj().T @ B - np.eye(vec.N))) > 1e-8:
        raise ValueError("orbital rotation matrix is not unitary")
    return vec.map_sectors(lambda eta, v: rotation_matrix(B, eta) @ v, basis)


def apply_one_body_rotation(vec: FockVector, K: np.ndarray, basis=None) -> FockVector:
    """Apply ``exp(sum K[p,q] a+_p a_q)`` for anti-Hermitian ``K``."""
    K = np.asarray(K)
    if np.max(np.abs(K + K.conj().T)) > HERMITIAN_TOL:
        raise ValueError("generator is not anti-Hermitian")
    return apply_orbital_rotation(vec, scipy.linalg.expm(K), basis)


def basis_change(C_from: np.ndarray, C_to: np.ndarray, S_A: np.ndarray, spins) -> np.ndarray:
    """Matrix ``B = C_to^T S_A C_from`` restricted to same-spin blocks.

    Rotating a state expressed in the ``C_from`` orbitals with ``B`` expresses
    it in the ``C_to`` orbitals.
    """
    spins = np.asarray(spins)
    B = C_to.T @ S_A @ C_from
    B = np.where(spins[:, None] == spins[None, :], B, 0.0)
    return B


def rotation_generator(B: np.ndarray) -> np.ndarray:
    """Principal logarithm ``K`` with ``expm(K) = B``.

    Real orthogonal ``B`` with a determinant of -1 has no real logarithm; the
    complex principal logarithm is returned then.
    """
    K = scipy.linalg.logm(B)
    if np.max(np.abs(K.imag)) < 1e-12:
        K = K.real
    return 0.5 * (K - K.conj().T)


@dataclass(frozen=True)
class OrbitalBasis:
    """Spin-orbital coefficients (``n x N``) with a label."""

    coefficients: np.ndarray
    spins: np.ndarray
    label: object

    @property
    def N(self) -> int:
        return self.coefficients.shape[1]

    def overlap_with(self, other: OrbitalBasis, S_A) -> np.ndarray:
        return basis_change(other.coefficients, self.coefficients, S_A, self.spins)


def transform_state(vec: FockVector, source: OrbitalBasis, target: OrbitalBasis, S_A) -> FockVector:
    """Re-express ``vec`` (given in ``source`` orbitals) in ``target`` orbitals."""
    if vec.basis != source.label:
        raise BasisMismatch(f"state is in basis {vec.basis!r}, not {source.label!r}")
    B = basis_change(source.coefficients, target.coefficients, S_A, source.spins)
    return apply_orbital_rotation(vec, B, target.label)


# ----------------------------------------------------------------------------
# cluster operators


def cluster_generator(sm: ClusterSupermatrix) -> FockOperator:
    """``tau = T - T^dagger`` with ``T = sum T[(p,s),(q,r)] a+_p a_s a+_q a_r``."""
    N = sm.N
    T = sm.T
    rows = np.flatnonzero(np.any(T != 0, axis=1))

    def build(eta):
        E = excitation_matrices(N, eta).reshape(N * N, *excitation_matrices(N, eta).shape[2:])
        D = E.shape[-1]
        out = np.zeros((D, D))
        for k in rows:
            cols = np.flatnonzero(T[k])
            out += E[k] @ np.tensordot(T[k, cols], E[cols], axes=1)
        return out - out.T

    return FockOperator(N, build, "antihermitian", "cluster generator")


def apply_cluster_exact(vec: FockVector, cluster) -> FockVector:
    """``exp(tau)|vec>`` by dense exponentiation within each particle sector.

    ``cluster`` is a :class:`ClusterSupermatrix` or the generator returned by
    :func:`cluster_generator` (reuse the latter to cache exponentials).
    """
    gen = cluster_generator(cluster) if isinstance(cluster, ClusterSupermatrix) else cluster
    if not hasattr(gen, "_expm_cache"):
        gen._expm_cache = {}
    cache = gen._expm_cache

    def act(eta, v):
        if eta not in cache:
            cache[eta] = scipy.linalg.expm(gen.matrix(eta))
        return cache[eta] @ v

    return vec.map_sectors(act)


def _phase_diagonal(phase: np.ndarray, eta: int) -> np.ndarray:
    occ = sector(phase.shape[0], eta).occ.astype(float)
    return np.einsum("xp,pq,xq->x", occ, phase, occ)


def square_term_unitary(term: SquareTerm, eta: int, scale: float = 1.0) -> np.ndarray:
    """Sector matrix of ``exp(-i scale Y^2)`` via its rotated number-operator form."""
    R = rotation_matrix(term.basis, eta)
    diag = np.exp(-1j * scale * _phase_diagonal(term.phase_matrix(), eta))
    return (R * diag[None, :]) @ R.conj().T


def apply_cluster_lowrank(vec: FockVector, fac: Factorization, k: int = 1) -> FockVector:
    """First-order Trotter product ``(prod_j exp(-i Y_j^2 / k))^k`` applied to ``vec``."""
    if k < 1:
        raise ValueError("Trotter order must be at least 1")
    if fac.N != vec.N:
        raise ValueError("factorization and state sizes differ")
    terms = list(fac.square_terms())

    def act(eta, v):
        if not terms:
            return v
        step = np.eye(len(v), dtype=complex)
        for term in terms:
            step = square_term_unitary(term, eta, 1.0 / k) @ step
        return np.linalg.matrix_power(step, k) @ v

    return vec.map_sectors(act)


def apply_ucj(vec: FockVector, layers) -> FockVector:
    """Apply ``prod_l exp(K_l) exp(-i sum_pq J_l[p,q] n_p n_q) exp(-K_l)``.

    ``layers`` is a sequence of ``(K, J)`` pairs with ``K`` anti-Hermitian and
    ``J`` real symmetric; the first layer acts last.
    """
    out = vec
    for K, J in reversed(list(layers)):
        K = np.asarray(K)
        J = np.asarray(J)
        if K.shape != (vec.N, vec.N) or J.shape != (vec.N, vec.N):
            raise ValueError("layer matrices must be N x N")
        if np.max(np.abs(K + K.conj().T)) > HERMITIAN_TOL:
            raise ValueError("orbital generator is not anti-Hermitian")
        if np.max(np.abs(J - J.T)) > HERMITIAN_TOL or np.max(np.abs(np.imag(J))) > 0:
            raise ValueError("Jastrow matrix must be real symmetric")
        B = scipy.linalg.expm(K)
        out = apply_orbital_rotation(out, B.conj().T, out.basis)
        out = out.map_sectors(lambda eta, v: np.exp(-1j * _phase_diagonal(J, eta)) * v)
        out = apply_orbital_rotation(out, B, out.basis)
    return out


def ucj_layer_from_term(term: SquareTerm) -> tuple[np.ndarray, np.ndarray]:
    """``(K, J)`` reproducing ``exp(-i Y^2)`` for one square term."""
    return rotation_generator(term.basis), term.phase_matrix()


# ----------------------------------------------------------------------------
# observables


def matrix_elements(psi_I: FockVector, psi_J: FockVector, H: FockOperator) -> tuple[complex, complex]:
    """``(<psi_I|H|psi_J>, <psi_I|psi_J>)`` for states in one common basis."""
    check_same_basis(psi_I, psi_J)
    hb = getattr(H, "basis", None)
    if hb is not None and hb != psi_I.basis:
        raise BasisMismatch(f"Hamiltonian is in basis {hb!r}, states in {psi_I.basis!r}")
    s = psi_I.inner(psi_J)
    h = complex(np.vdot(psi_I.amplitudes, H.apply(psi_J).amplitudes))
    return h, s


def s_squared_operator(C: np.ndarray, S_A: np.ndarray, spins) -> FockOperator:
    """``S^2 = S_- S_+ + S_z (S_z + 1)`` for spin-orbitals with coefficients ``C``."""
    spins = np.asarray(spins)
    N = len(spins)
    alpha = np.flatnonzero(spins == 0)
    beta = np.flatnonzero(spins == 1)
    O = C[:, alpha].T @ S_A @ C[:, beta]
    raise_mat = np.zeros((N, N))
    raise_mat[np.ix_(alpha, beta)] = O
    sz_diag = np.where(spins == 0, 0.5, -0.5)

    def build(eta):
        E = excitation_matrices(N, eta)
        sp = np.einsum("pq,pqxy->xy", raise_mat, E)
        sz = np.diag(sector(N, eta).occ @ sz_diag)
        return sp.T @ sp + sz @ sz + sz

    return FockOperator(N, build, "hermitian", "S^2")


def s_squared(vec: FockVector, op: FockOperator) -> float:
    n2 = vec.norm**2
    return float(op.expectation(vec).real / n2)


@dataclass(frozen=True)
class FCIResult:
    energies: np.ndarray
    vectors: np.ndarray  # columns in the restricted determinant list
    dets: np.ndarray
    N: int
    basis: object = None

    def state(self, k: int) -> FockVector:
        amps = np.zeros(1 << self.N, dtype=complex)
        amps[self.dets] = self.vectors[:, k]
        return FockVector(amps, self.N, self.basis)


def fci_solve(H: FockOperator, eta: int, m_s: float, spins) -> FCIResult:
    """Exact eigenpairs in the sector with ``eta`` electrons and spin projection ``m_s``."""
    spins = np.asarray(spins)
    sec = sector(H.N, eta)
    sz = sec.occ @ np.where(spins == 0, 0.5, -0.5)
    keep = np.flatnonzero(np.abs(sz - m_s) < 1e-9)
    if keep.size == 0:
        raise ValueError("empty (eta, m_s) sector")
    h = H.matrix(eta)[np.ix_(keep, keep)]
    w, v = np.linalg.eigh(h)
    return FCIResult(w, v, sec.dets[keep], H.N, getattr(H, "basis", None))


# ----------------------------------------------------------------------------
# Hadamard-test circuit


def hadamard_test_oracle(ref_I: FockVector, ref_J: FockVector,
                         prepare_I: Callable[[FockVector], FockVector],
                         prepare_J: Callable[[FockVector], FockVector],
                         H: FockOperator, part: str = "real") -> tuple[float, float]:
    """Simulate the two-register Hadamard test and return ``(H_IJ, S_IJ)`` parts.

    The ``2N+1`` qubit state starts as ``|ref>|vac>|anc>`` with ``|anc>`` the
    ``+X`` (``part="real"``) or ``+Y`` (``part="imag"``) eigenstate. A
    controlled swap, the per-register preparations (cluster unitary then
    basis rotation), a second controlled swap and a final Hadamard on the
    ancilla follow. ``<Z_anc>`` and ``<H Z_anc>`` on register 1 give the real
    parts directly; with the ``+Y`` ancilla they give minus the imaginary parts.
    """
    if ref_I.N != ref_J.N:
        raise BasisMismatch("references live on different numbers of modes")
    N = ref_I.N
    dim = 1 << N
    # psi[r1, r2, anc]
    psi = np.zeros((dim, dim, 2), dtype=complex)
    anc = np.array([1.0, 1.0]) / np.sqrt(2) if part == "real" else np.array([1.0, 1j]) / np.sqrt(2)
    if part not in ("real", "imag"):
        raise ValueError("part must be 'real' or 'imag'")
    vac = np.zeros(dim)
    vac[0] = 1.0
    psi[:, :, 0] = anc[0] * np.outer(ref_I.amplitudes, vac)
    psi[:, :, 1] = anc[1] * np.outer(ref_J.amplitudes, vac)

    def cswap(state):
        out = state.copy()
        out[:, :, 1] = state[:, :, 1].T
        return out

    def on_register(state, fn, reg, label):
        out = np.zeros_like(state)
        for a in range(2):
            block = state[:, :, a] if reg == 0 else state[:, :, a].T
            res = np.zeros_like(block)
            for col in np.flatnonzero(np.any(np.abs(block) > 0, axis=0)):
                v = FockVector(block[:, col].copy(), N, label)
                res[:, col] = fn(v).amplitudes
            out[:, :, a] = res if reg == 0 else res.T
        return out

    psi = cswap(psi)
    psi = on_register(psi, prepare_I, 0, ref_I.basis)
    psi = on_register(psi, prepare_J, 1, ref_J.basis)
    psi = cswap(psi)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    psi = np.einsum("ab,xyb->xya", h, psi)

    z = np.array([1.0, -1.0])
    z_exp = float(np.einsum("xya,a->", np.abs(psi) ** 2, z))
    Hpsi = np.zeros_like(psi)
    for a in range(2):
        for col in np.flatnonzero(np.any(np.abs(psi[:, :, a]) > 0, axis=0)):
            v = FockVector(psi[:, col, a].copy(), N, None)
            Hpsi[:, col, a] = H.apply(v).amplitudes
    hz = float(np.real(np.einsum("xya,xya,a->", psi.conj(), Hpsi, z)))
    if part == "imag":
        return -hz, -z_exp
    return hz, z_exp
