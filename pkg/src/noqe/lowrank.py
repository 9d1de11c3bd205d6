"""Double factorization of the cluster supermatrix and its error bounds.

The first factorization writes ``T = sum_l sigma_l u_l v_l^dagger`` (SVD) or,
for a symmetric supermatrix, ``T = sum_l sigma_l u_l u_l^T`` (Takagi). With
``A_l = sqrt(sigma_l) sum u_l[ps] a+_p a_s`` and
``B_l = sqrt(sigma_l) sum conj(v_l[qr]) a+_q a_r`` the two commute, so

    A B - (A B)^dagger = -i (Y_1^2 + Y_2^2 + Y_3^2 + Y_4^2)

exactly, with ``Y`` built from the Hermitian and anti-Hermitian parts of
``A + B`` and ``A - B``. For Takagi ``B = A`` and only two operators remain.
Every ``Y`` is ``c * h`` with ``h`` Hermitian and ``c`` equal to 1 or ``i``,
so ``Y^2 = c^2 h^2`` and the second factorization is an ordinary ``eigh``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .correlation import ClusterSupermatrix

log = logging.getLogger(__name__)

RANK_CUT = 1e-12
NNZ_CUT = 1e-12


@dataclass(frozen=True)
class SquareTerm:
    """One ``Y^2`` term: ``Y = c h``, ``h = basis diag(lam) basis^dagger``.

    ``sign`` is ``c^2`` (+1 for Hermitian ``Y``, -1 for anti-Hermitian ``Y``),
    so ``exp(-i Y^2) = basis exp(-i sign lam_p lam_q n_p n_q) basis^dagger``.
    """

    y: np.ndarray
    lam: np.ndarray
    basis: np.ndarray
    sign: int

    @property
    def rho(self) -> int:
        return int(np.sum(np.abs(self.lam) > RANK_CUT))

    def phase_matrix(self) -> np.ndarray:
        return self.sign * np.outer(self.lam, self.lam)


@dataclass(frozen=True)
class FactorBlock:
    sigma: float
    u: np.ndarray  # length N^2, complex
    v: np.ndarray
    terms: tuple[SquareTerm, ...]

    @property
    def nnz_u(self) -> int:
        return int(np.sum(np.abs(self.u) > NNZ_CUT))

    @property
    def nnz_v(self) -> int:
        return int(np.sum(np.abs(self.v) > NNZ_CUT))


@dataclass(frozen=True)
class Factorization:
    method: str
    N: int
    blocks: tuple[FactorBlock, ...]
    L_full: int | None = None  # rank before any truncation

    @property
    def L_eff(self) -> int:
        return len(self.blocks)

    @property
    def m(self) -> int:
        return 2 if self.method == "takagi" else 4

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([b.sigma for b in self.blocks])

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.N**2, self.N**2), dtype=complex)
        for b in self.blocks:
            out += b.sigma * np.outer(b.u, b.v.conj())
        return out

    def square_terms(self):
        for b in self.blocks:
            yield from b.terms


class FactorizationError(ArithmeticError):
    pass


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(vec) > NNZ_CUT)
    if nz.size == 0:
        return vec
    first = vec[nz[0]]
    return vec * (abs(first) / first)


def _square_term(matrix: np.ndarray, sign: int) -> SquareTerm:
    # matrix = c h with c = 1 (sign +1) or c = i (sign -1)
    h = matrix if sign > 0 else -1j * matrix
    h = 0.5 * (h + h.conj().T)
    lam, basis = np.linalg.eigh(h)
    return SquareTerm(matrix, lam, basis, sign)


def square_terms_for(a: np.ndarray, b: np.ndarray, method: str) -> tuple[SquareTerm, ...]:
    """Square operators whose sum is ``i (A B - (A B)^dagger)`` for one-body matrices."""
    terms = []
    pairs = [(a + b, +1)] if method == "takagi" else [(a + b, +1), (a - b, -1)]
    for mat, outer in pairs:
        x = 0.5 * (mat + mat.conj().T)
        y = (mat - mat.conj().T) / 2j
        # tau = (i/4) * outer * [(x+y)^2 - (x-y)^2]
        plus = 0.5 * (x + y)
        minus = 0.5 * (x - y)
        if outer > 0:
            terms.append(_square_term(1j * plus, -1))
            terms.append(_square_term(minus, +1))
        else:
            terms.append(_square_term(plus, +1))
            terms.append(_square_term(1j * minus, -1))
    return tuple(terms)


def factorize(sm: ClusterSupermatrix | np.ndarray, method: str = "takagi", N: int | None = None,
              *, tol: float = 1e-10) -> Factorization:
    """Double-factorize a cluster supermatrix.

    ``method="takagi"`` symmetrizes the input first; ``method="svd"`` uses it
    as is. Singular values at or below 1e-12 are dropped.
    """
    if isinstance(sm, ClusterSupermatrix):
        T, N = sm.T, sm.N
    else:
        T = np.asarray(sm)
        if N is None:
            N = int(round(math.sqrt(T.shape[0])))
    if T.shape != (N * N, N * N):
        raise ValueError("supermatrix shape does not match N")
    blocks = []
    if method == "takagi":
        target = 0.5 * (T + T.T)
        w, vecs = np.linalg.eigh(target)
        order = np.argsort(-np.abs(w), kind="stable")
        for k in order:
            if abs(w[k]) <= RANK_CUT:
                continue
            u = _fix_sign(vecs[:, k].astype(complex))
            if w[k] < 0:
                u = 1j * u
            blocks.append((abs(w[k]), u, u.conj()))
    elif method == "svd":
        target = T
        U, s, Vh = np.linalg.svd(T)
        for k in range(len(s)):
            if s[k] <= RANK_CUT:
                continue
            u = U[:, k].astype(complex)
            v = Vh[k].conj().astype(complex)
            nz = np.flatnonzero(np.abs(u) > NNZ_CUT)
            phase = abs(u[nz[0]]) / u[nz[0]]
            blocks.append((s[k], u * phase, v * phase))
    else:
        raise ValueError(f"unknown factorization method {method!r}")

    out = []
    for sigma, u, v in blocks:
        a = math.sqrt(sigma) * u.reshape(N, N)
        b = math.sqrt(sigma) * v.conj().reshape(N, N)
        out.append(FactorBlock(float(sigma), u, v, square_terms_for(a, b, method)))
    fac = Factorization(method, N, tuple(out), len(out))
    err = np.linalg.norm(fac.reconstruct() - target)
    if err > tol * max(1.0, np.linalg.norm(target)):
        raise FactorizationError(f"reconstruction error {err:.2e}")
    return fac


@dataclass(frozen=True)
class TruncationReport:
    epsilon: float
    L_trunc: tuple[int, ...]
    L_eff: tuple[int, ...]

    @property
    def total_cost_reduction(self) -> float:
        total = sum(self.L_eff)
        return 0.0 if total == 0 else 1.0 - sum(self.L_trunc) / total


def kept_rank(sigmas, epsilon: float, p: float = 2) -> int:
    """Smallest ``R`` with ``||sigmas[R:]||_p <= epsilon`` (sigmas nonincreasing)."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    sigmas = np.asarray(sigmas, dtype=float)
    for R in range(len(sigmas) + 1):
        tail = sigmas[R:]
        norm = 0.0 if tail.size == 0 else float(np.linalg.norm(tail, ord=p))
        if norm <= epsilon:
            return R
    return len(sigmas)


def truncate(fac: Factorization, epsilon: float, p: float = 2) -> tuple[Factorization, TruncationReport]:
    """Drop the largest tail of singular values whose l^p norm is at most ``epsilon``."""
    R = kept_rank(fac.sigmas, epsilon, p) if fac.blocks else 0
    kept = Factorization(fac.method, fac.N, fac.blocks[:R], fac.L_full)
    return kept, TruncationReport(epsilon, (R,), (fac.L_eff,))


def combine_reports(reports) -> TruncationReport:
    reports = list(reports)
    eps = reports[0].epsilon if reports else 0.0
    return TruncationReport(
        eps,
        tuple(x for r in reports for x in r.L_trunc),
        tuple(x for r in reports for x in r.L_eff),
    )


def _effective_nnz(block: FactorBlock, method: str) -> float:
    if method == "takagi":
        return float(block.nnz_u)
    return 0.25 * (math.sqrt(block.nnz_u) + math.sqrt(block.nnz_v)) ** 2


def bound_weights(fac: Factorization) -> np.ndarray:
    """``nnz_k * sigma_k`` for every square term ``k`` (each block contributes ``m``)."""
    return np.array(
        [_effective_nnz(b, fac.method) * b.sigma for b in fac.blocks for _ in range(fac.m)]
    )


def _weights(arg) -> np.ndarray:
    if isinstance(arg, Factorization):
        return bound_weights(arg)
    arr = np.asarray(arg, dtype=float)
    if arr.ndim == 2:  # rows of (nnz, sigma)
        return arr[:, 0] * arr[:, 1]
    return arr


def trotter_error_bound(fac, p: int) -> float:
    """``((1/2p) sum_k nnz_k sigma_k)^(p+1)`` on ``||exact - Trotterized||``.

    ``fac`` is a :class:`Factorization` or an array of ``(nnz, sigma)`` rows.
    """
    if p < 1:
        raise ValueError("Trotter order must be at least 1")
    w = _weights(fac)
    if w.size == 0:
        return 0.0
    smax = float(np.max(w))
    if smax / p > 1:
        log.warning("Trotter bound used outside its small-step regime (%.3g / %d)", smax, p)
    return float((w.sum() / (2 * p)) ** (p + 1))


def truncation_error_bound(fac, R: int) -> float:
    """``1/2 (1 + sum_kept nnz sigma)(sum_dropped nnz sigma)`` for kept rank ``R``.

    With a :class:`Factorization`, ``R`` counts singular values (each carrying
    ``m`` square terms); with raw ``(nnz, sigma)`` rows it counts rows.
    """
    if isinstance(fac, Factorization):
        if R > fac.L_eff:
            raise ValueError("kept rank exceeds the effective rank")
        w = bound_weights(fac)
        cut = R * fac.m
    else:
        w = _weights(fac)
        cut = R
    return float(0.5 * (1.0 + w[:cut].sum()) * w[cut:].sum())


@dataclass(frozen=True)
class EigenangleBound:
    angles: np.ndarray  # nan where vacuous
    vacuous: np.ndarray
    final: float  # loose bound using d_J^-1 <= 1, nan when vacuous
    d: np.ndarray


def _unit_eigvecs(H, S):
    import scipy.linalg

    w, c = scipy.linalg.eigh(H, S)
    c = c / np.linalg.norm(c, axis=0)
    return w, c


def mathias_li_bound(H, S, dH: float, dS: float, *, h_norm: float | None = None,
                     delta_u: float | None = None) -> EigenangleBound:
    """Eigenangle perturbation bounds ``asin(M d_J^-1 sqrt(dS^2 + dH^2))``.

    ``final`` is the loose variant ``asin(2 M^2 dU sqrt(1 + ||H||_u^2))`` and is
    returned when ``h_norm`` and ``delta_u`` are given.
    """
    H = np.asarray(H)
    S = np.asarray(S)
    M = H.shape[0]
    _, c = _unit_eigvecs(H, S)
    d = np.abs(np.einsum("pj,pq,qj->j", c.conj(), H + 1j * S, c))
    arg = M * np.sqrt(dS**2 + dH**2) / d
    vac = arg > 1
    angles = np.where(vac, np.nan, np.arcsin(np.minimum(arg, 1.0)))
    final = float("nan")
    if h_norm is not None and delta_u is not None:
        a = 2 * M**2 * delta_u * math.sqrt(1 + h_norm**2)
        final = math.asin(a) if a <= 1 else float("nan")
    return EigenangleBound(angles, vac, final, d)


def eigenangles(H, S) -> np.ndarray:
    w, _ = _unit_eigvecs(np.asarray(H), np.asarray(S))
    return np.arctan(w)


def min_trotter_order(fac, target: float, M: int, h_norm: float, *, max_order: int = 64) -> int:
    """Smallest ``p <= 64`` whose Trotter bound meets the eigenangle target."""
    if not 0 < target < math.pi / 2:
        raise ValueError("target eigenangle must lie in (0, pi/2)")
    rhs = math.sin(target) / (M**2 * math.sqrt(1 + h_norm**2))
    w = _weights(fac)
    for p in range(1, max_order + 1):
        lhs = 0.0 if w.size == 0 else (w.sum() / (2 * p)) ** (p + 1)
        if lhs <= rhs:
            return p
    raise ValueError(f"no Trotter order up to {max_order} meets the target")


def dump_factorization(fac: Factorization, path) -> None:
    """Per block: sigma, then each square term's sign, eigenvalues and basis, 17 digits."""
    lines = [f"method {fac.method} N {fac.N} L {fac.L_eff}"]
    for l, b in enumerate(fac.blocks):
        lines.append(f"block {l} sigma {b.sigma:.17g}")
        for mu, term in enumerate(b.terms):
            lines.append(f"term {mu} sign {term.sign}")
            lines.append("lambda " + " ".join(f"{x:.17g}" for x in term.lam))
            for row in term.basis:
                lines.append("B " + " ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
