"""MP2 doubles amplitudes, spin-component scaling and the cluster supermatrix.

Amplitudes ``t[a, b, i, j]`` multiply the excitation ``a+_a a+_b a_j a_i``
so that the cluster operator is ``T = 1/4 sum t[a,b,i,j] a+_a a+_b a_j a_i``
and the anti-Hermitian generator is ``tau = T - T^dagger``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .integrals import MOIntegrals, antisymmetrized_eri

DENOMINATOR_GUARD = 1e-8


class NearZeroDenominator(ArithmeticError):
    """An MP2 energy denominator vanished; ``quadruple`` is ``(a, b, i, j)``."""

    def __init__(self, quadruple, value):
        super().__init__(f"MP2 denominator {value:.3e} for (a,b,i,j)={quadruple}")
        self.quadruple = quadruple
        self.value = value


@dataclass(frozen=True)
class ClusterAmplitudes:
    t: np.ndarray  # (N, N, N, N), indexed [a, b, i, j]
    occupied: tuple[int, ...]
    spins: np.ndarray
    reference: int = 0
    energy: float = 0.0  # second-order correlation energy of the unscaled amplitudes

    @property
    def N(self) -> int:
        return self.t.shape[0]

    @property
    def virtual(self) -> tuple[int, ...]:
        occ = set(self.occupied)
        return tuple(p for p in range(self.N) if p not in occ)

    def same_spin_mask(self) -> np.ndarray:
        s = self.spins
        return (
            (s[:, None, None, None] == s[None, :, None, None])
            & (s[:, None, None, None] == s[None, None, :, None])
            & (s[:, None, None, None] == s[None, None, None, :])
        )


def mp2_amplitudes(mo: MOIntegrals, eps, occupied, *, reference: int = 0) -> ClusterAmplitudes:
    """First-order doubles amplitudes over canonical spin-orbitals.

    Parameters
    ----------
    mo
        Integrals in the reference's own spin-orbital basis.
    eps
        Orbital energies, one per spin-orbital.
    occupied
        Indices of the occupied spin-orbitals.

    Raises
    ------
    NearZeroDenominator
        If a spin-allowed denominator has magnitude below 1e-8 hartree.
    """
    eps = np.asarray(eps, dtype=float)
    N = mo.n
    occ = np.zeros(N, bool)
    occ[list(occupied)] = True
    vir = ~occ
    s = mo.spins
    denom = (eps[:, None, None, None] + eps[None, :, None, None]
             - eps[None, None, :, None] - eps[None, None, None, :])
    block = vir[:, None, None, None] & vir[None, :, None, None] & occ[None, None, :, None] & occ[None, None, None, :]
    distinct = (np.arange(N)[:, None] != np.arange(N)[None, :])
    block &= distinct[:, :, None, None] & distinct[None, None, :, :]
    spin_ok = (s[:, None, None, None] + s[None, :, None, None]) == (s[None, None, :, None] + s[None, None, None, :])
    active = block & spin_ok
    small = active & (np.abs(denom) <= DENOMINATOR_GUARD)
    if small.any():
        quad = tuple(int(x) for x in np.argwhere(small)[0])
        raise NearZeroDenominator(quad, float(denom[quad]))

    anti = antisymmetrized_eri(mo)  # anti[i, j, a, b] = <ij||ab>
    numer = anti.transpose(2, 3, 0, 1)  # [a, b, i, j]
    t = np.zeros((N,) * 4)
    t[active] = -numer[active] / denom[active]
    energy = 0.25 * float(np.sum(t * numer))
    return ClusterAmplitudes(t, tuple(int(k) for k in np.flatnonzero(occ)), np.asarray(s),
                             reference, energy)


def correlation_energy(amps: ClusterAmplitudes, mo: MOIntegrals) -> float:
    """1/4 sum t[a,b,i,j] <ij||ab> for arbitrary (possibly scaled) amplitudes."""
    numer = antisymmetrized_eri(mo).transpose(2, 3, 0, 1)
    return 0.25 * float(np.sum(amps.t * numer))


@dataclass(frozen=True)
class ScalingScheme:
    """Multipliers for same-spin and opposite-spin amplitude classes."""

    kind: str = "uniform"
    c_ss: float = 1.0
    c_os: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "scs", "sos"):
            raise ValueError(f"unknown scaling kind {self.kind!r}")
        for c in (self.c_ss, self.c_os):
            if not np.isfinite(c) or c < 0:
                raise ValueError("scaling factors must be finite and nonnegative")
        if self.kind == "uniform" and self.c_ss != self.c_os:
            raise ValueError("uniform scaling uses one factor for both spin classes")
        if self.kind == "sos" and self.c_ss != 0:
            raise ValueError("spin-opposite scaling drops same-spin amplitudes")

    @classmethod
    def uniform(cls, s: float = 1.0) -> ScalingScheme:
        return cls("uniform", s, s)

    @classmethod
    def scs(cls, c_ss: float = 0.33, c_os: float = 1.2) -> ScalingScheme:
        return cls("scs", c_ss, c_os)

    @classmethod
    def sos(cls, c_os: float = 1.3) -> ScalingScheme:
        return cls("sos", 0.0, c_os)

    @classmethod
    def parse(cls, text: str) -> ScalingScheme:
        """Accepts ``1.2``, ``uniform:1.2``, ``scs``, ``scs:0.33,1.2``, ``sos`` or ``sos:1.3``.

        Factors after the kind may be separated by commas or colons.
        """
        parts = str(text).strip().lower().replace(",", ":").split(":")
        head = parts[0]
        try:
            vals = [float(x) for x in parts[1:]]
            if head not in ("uniform", "scs", "sos"):
                return cls.uniform(float(head))
        except ValueError as exc:
            raise ValueError(f"cannot parse scaling scheme {text!r}") from exc
        if head == "uniform":
            return cls.uniform(*vals)
        if head == "scs":
            return cls.scs(*vals)
        return cls.sos(*vals)

    def label(self) -> str:
        if self.kind == "uniform":
            return f"{self.c_os:g}"
        if self.kind == "sos":
            return f"sos:{self.c_os:g}"
        return f"scs:{self.c_ss:g},{self.c_os:g}"


def scale_amplitudes(amps: ClusterAmplitudes, scheme: ScalingScheme) -> ClusterAmplitudes:
    same = amps.same_spin_mask()
    t = np.where(same, scheme.c_ss * amps.t, scheme.c_os * amps.t)
    return replace(amps, t=t)


def slot_rank(spins: np.ndarray, order: str = "interleaved") -> np.ndarray:
    """Position of each spin-orbital in the ordering used for ``p < q`` comparisons.

    ``"block"`` keeps the storage order (all alpha, then all beta).
    ``"interleaved"`` places spatial orbital ``k`` of spin ``s`` at ``2k + s``,
    counting spatial orbitals separately within each spin.
    """
    spins = np.asarray(spins)
    if order == "block":
        return np.arange(len(spins))
    if order != "interleaved":
        raise ValueError(f"unknown slot ordering {order!r}")
    rank = np.empty(len(spins), int)
    for s in (0, 1):
        idx = np.flatnonzero(spins == s)
        rank[idx] = 2 * np.arange(len(idx)) + s
    return rank


@dataclass(frozen=True)
class ClusterSupermatrix:
    """``N^2 x N^2`` matrix with element ``[(p,s), (q,r)]`` at ``[p*N + s, q*N + r]``.

    The cluster operator is ``T = sum T[(p,s),(q,r)] a+_p a_s a+_q a_r``.
    """

    T: np.ndarray
    N: int
    order: str = "interleaved"
    symmetrized: bool = False

    def symmetrize(self) -> ClusterSupermatrix:
        return ClusterSupermatrix(0.5 * (self.T + self.T.T), self.N, self.order, True)


def build_supermatrix(amps: ClusterAmplitudes, order: str = "interleaved") -> ClusterSupermatrix:
    """Place each amplitude once, in the slot with ``p < q`` and ``s < r``.

    ``p, q`` run over virtual and ``s, r`` over occupied spin-orbitals; the
    comparisons use :func:`slot_rank` with the given ``order``.
    """
    N = amps.N
    rank = slot_rank(amps.spins, order)
    occ = np.array(amps.occupied, dtype=int)
    vir = np.array(amps.virtual, dtype=int)
    T = np.zeros((N * N, N * N))
    t = amps.t
    for p in vir:
        for q in vir:
            if rank[p] >= rank[q]:
                continue
            for s in occ:
                for r in occ:
                    if rank[s] >= rank[r]:
                        continue
                    # a+_p a_s a+_q a_r = a+_p a+_q a_r a_s, i.e. (a,b,i,j) = (p,q,s,r)
                    T[p * N + s, q * N + r] = t[p, q, s, r]
    return ClusterSupermatrix(T, N, order, False)


def dump_amplitudes(amps: ClusterAmplitudes, path, *, tol: float = 0.0) -> None:
    """Write ``a b i j value`` lines for every entry with ``|t| > tol``."""
    lines = [f"# reference {amps.reference} N {amps.N}"]
    for idx in zip(*np.nonzero(np.abs(amps.t) > tol)):
        lines.append(" ".join(str(int(k)) for k in idx) + f" {amps.t[idx]:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_amplitudes(path, spins, occupied) -> ClusterAmplitudes:
    spins = np.asarray(spins)
    N = len(spins)
    t = np.zeros((N,) * 4)
    ref = 0
    with open(path) as fh:
        for ln in fh:
            if ln.startswith("#"):
                ref = int(ln.split()[2])
                continue
            parts = ln.split()
            if parts:
                t[tuple(int(x) for x in parts[:4])] = float(parts[4])
    return ClusterAmplitudes(t, tuple(occupied), spins, ref)
