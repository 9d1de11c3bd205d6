"""Closed-form gate counts, reference counts and circuit-depth scheduling.

Gate costs used throughout: a Givens rotation takes 4 CNOTs and 2 Rz, a
number-operator pair rotation takes 2 CNOTs and 3 Rz, and a CSWAP takes
8 CNOTs and 7 Rz. Full qubit connectivity is assumed, so no SWAP-network
overhead appears anywhere.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from .lowrank import Factorization


@dataclass(frozen=True)
class CostModel:
    """Parameters of the gate-count formulas.

    Attributes
    ----------
    N : int
        Spin-orbitals (qubits per register).
    M : int
        Number of references.
    k : int
        Trotter order.
    m : int
        Square terms per retained singular value (2 Takagi, 4 SVD, 1 for a
        single Jastrow layer).
    L : float
        Retained rank; may be fractional when it comes from a prefactor rule.
    eps_syn : float
        Rotation-synthesis error used for the T count.
    """

    N: int
    M: int = 2
    k: int = 1
    m: int = 2
    L: float = 1.0
    eps_syn: float = 1e-3

    def __post_init__(self):
        if self.N <= 0 or self.M <= 0 or self.k <= 0:
            raise ValueError("N, M and k must be positive")
        if self.m not in (1, 2, 4):
            raise ValueError("m must be 1, 2 or 4")
        if self.L < 0:
            raise ValueError("L must be nonnegative")
        if not 0 < self.eps_syn < 1:
            raise ValueError("eps_syn must lie in (0, 1)")

    @property
    def rotation_givens(self) -> int:
        """Givens rotations in one unrestricted basis rotation, ``2 C(N/2, 2)``."""
        return 2 * math.comb(self.N // 2, 2)


@dataclass(frozen=True)
class GateCounts:
    swap: float
    givens: float
    numop: float
    offdiag: float
    diag: float
    total: float


@dataclass(frozen=True)
class ResourceReport:
    model: CostModel
    cnot: GateCounts
    rz: GateCounts
    t_count: int
    qubits_full: int
    qubits_reduced: int


def cnot_counts(model: CostModel) -> GateCounts:
    N, k, m, L, M = model.N, model.k, model.m, model.L, model.M
    g = model.rotation_givens
    swap = 32 * N
    givens = 4 * k * (2 * g * (1 + m * L) + g)
    numop = 4 * k * m * L * math.comb(N, 2)
    offdiag = swap + givens + numop
    diag = 4 * g * (1 + m * L) + numop / 2
    total = M * (M - 1) / 2 * offdiag + M * diag
    return GateCounts(swap, givens, numop, offdiag, diag, total)


def rz_counts(model: CostModel) -> GateCounts:
    N, k, m, L, M = model.N, model.k, model.m, model.L, model.M
    g = model.rotation_givens
    swap = 28 * N
    givens = 2 * k * (2 * g * (1 + m * L) + g)
    numop = 3 * k * m * L * N * (N + 1)
    offdiag = swap + givens + numop
    diag = 2 * g * (1 + m * L) + numop / 2
    total = M * (M - 1) / 2 * offdiag + M * diag
    return GateCounts(swap, givens, numop, offdiag, diag, total)


def t_count(rz: float, eps_syn: float) -> int:
    """T gates for ``rz`` arbitrary rotations synthesized to error ``eps_syn``."""
    if not 0 < eps_syn < 1:
        raise ValueError("eps_syn must lie in (0, 1)")
    if rz < 0:
        raise ValueError("rotation count must be nonnegative")
    if rz == 0:
        return 0
    return math.ceil(rz * (1.15 * math.log2(1 / eps_syn) + 9.2))


def resource_report(model: CostModel) -> ResourceReport:
    rz = rz_counts(model)
    return ResourceReport(model, cnot_counts(model), rz, t_count(rz.total, model.eps_syn),
                          2 * model.N + 1, model.N + 1)


def reference_counts(d: int, n_alpha: int, n_beta: int) -> tuple[int, int]:
    """``(M_NOQE, M_CAS)`` for ``d`` radical sites holding ``n_alpha + n_beta`` electrons.

    ``M_NOQE = d! / (n_a! n_b! (d - n_a - n_b)!)`` counts site spin patterns
    without pairing. ``M_CAS = C(d, n_a) C(d, n_b)`` is the determinant
    count of a (d orbital) complete active space.
    """
    if min(d, n_alpha, n_beta) < 0 or n_alpha + n_beta > d:
        raise ValueError("need 0 <= n_alpha + n_beta <= d")
    f = math.factorial
    m_noqe = f(d) // (f(n_alpha) * f(n_beta) * f(d - n_alpha - n_beta))
    m_cas = f(d) ** 2 // (f(n_alpha) * f(n_beta) * f(d - n_alpha) * f(d - n_beta))
    return m_noqe, m_cas


# --- circuit depth -------------------------------------------------------


def givens_network(n: int) -> list[tuple[int, int]]:
    """Nearest-neighbour rotations that triangularize an ``n``-mode unitary.

    Column by column, from the bottom row upwards; ``C(n, 2)`` rotations.
    """
    return [(row - 1, row) for col in range(n - 1) for row in range(n - 1, col, -1)]


def schedule(ops, n_qubits: int, cost: int = 1, front=None) -> np.ndarray:
    """Greedy as-soon-as-possible layering; returns the per-qubit finishing layer."""
    front = np.zeros(n_qubits, dtype=int) if front is None else np.array(front)
    for op in ops:
        q = list(op)
        front[q] = front[q].max() + cost
    return front


def rotation_depth(N: int, givens_cost: int = 1) -> int:
    """Depth of one unrestricted basis rotation: two spin blocks side by side."""
    half = N // 2
    ops = givens_network(half) + [(a + half, b + half) for a, b in givens_network(half)]
    return int(schedule(ops, N, givens_cost).max())


def schedule_depth(fac: Factorization | None = None, *, N: int | None = None,
                   L: int | None = None, m: int | None = None, givens_cost: int = 1,
                   include_singles: bool = False) -> int:
    """Layers of the state-preparation circuit for one reference.

    ``1 + mL`` basis rotations (the last one absorbs the change to the common
    basis) interleave with ``mL`` number-operator blocks of ``N`` layers each.
    ``givens_cost`` is 1 when a Givens rotation counts as one layer and 4
    when it is counted after CNOT decomposition. ``include_singles`` adds
    the extra basis rotation a singles term would need.
    """
    if fac is not None:
        N, L, m = fac.N, fac.L_eff, fac.m
    if N is None or L is None or m is None:
        raise ValueError("give a factorization or all of N, L, m")
    rot = rotation_depth(N, givens_cost)
    n_rot = 1 + m * L + (1 if include_singles else 0)
    return n_rot * rot + m * L * N


# --- tables --------------------------------------------------------------


def l_policy(N: int, policy: str) -> float:
    """Retained rank under a named rule: ``full`` (N^2), ``trunc`` (0.04 N^2) or ``ucj`` (1)."""
    if policy == "full":
        return float(N * N)
    if policy == "trunc":
        return 0.04 * N * N
    if policy == "ucj":
        return 1.0
    raise ValueError(f"unknown L policy {policy!r}")


RESOURCE_COLUMNS = ("N", "d", "M", "policy", "L", "m", "k", "cnot", "rz", "t", "depth",
                    "depth_cnot")


def resource_rows(N_values, d_values, policies=("full", "trunc", "ucj"), *, k: int = 1,
                  eps_syn: float = 1e-3):
    """One row per (N, d, policy); ``d`` radical sites at ``m_s = 0``."""
    rows = []
    for d in d_values:
        M, _ = reference_counts(d, d // 2, d - d // 2)
        for policy in policies:
            m = 1 if policy == "ucj" else 2
            for N in N_values:
                L = l_policy(N, policy)
                model = CostModel(N, M, k, m, L, eps_syn)
                rep = resource_report(model)
                # Givens rotations as single layers, and as four CNOT layers each
                depth = schedule_depth(N=N, L=math.ceil(L), m=m)
                depth_cnot = schedule_depth(N=N, L=math.ceil(L), m=m, givens_cost=4)
                rows.append(dict(N=N, d=d, M=M, policy=policy, L=L, m=m, k=k,
                                 cnot=rep.cnot.total, rz=rep.rz.total, t=rep.t_count,
                                 depth=depth, depth_cnot=depth_cnot))
    return rows


def rows_to_csv(rows, columns=RESOURCE_COLUMNS, fmt: str = "%.12g") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt % r[c] if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def as_dict(report: ResourceReport) -> dict:
    return asdict(report)
