"""Hartree-Fock solvers and generation of spin-permuted UHF references.

Reference generation follows four steps: a high-spin solution with every
radical site singly occupied, Foster-Boys localization of its occupied
orbitals onto the sites, enumeration of all alpha/beta site assignments with
the requested ``m_s``, and relaxation of each assignment to the nearest
stationary point by minimizing the squared orbital gradient.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy.optimize import leastsq, linear_sum_assignment

from .chem import BOHR_IN_ANGSTROM, Molecule
from .integrals import IntegralSet

log = logging.getLogger(__name__)

GRADIENT_TOL = 1e-8
DIIS_SIZE = 8
MAX_ITER = 200
LOCALIZATION_THRESHOLD = 0.7
DUPLICATE_TOL = 1e-8


class SCFConvergenceError(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class LocalizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SCFSolution:
    """One Hartree-Fock determinant in canonical orbitals.

    Orbitals are stored per spin, occupied columns first and each block
    ordered by orbital energy.
    """

    c_alpha: np.ndarray
    c_beta: np.ndarray
    eps_alpha: np.ndarray
    eps_beta: np.ndarray
    n_alpha: int
    n_beta: int
    energy: float
    converged: bool
    gradient_norm: float
    s_squared: float
    mode: str = "unrestricted"
    iterations: int = 0
    flags: tuple[str, ...] = ()
    guess_overlap: float = 1.0

    @property
    def n_spatial(self) -> int:
        return self.c_alpha.shape[0]

    @property
    def coefficients(self) -> np.ndarray:
        """``n x N`` spin-orbital coefficients, alpha block then beta block."""
        return np.hstack([self.c_alpha, self.c_beta])

    @property
    def eps(self) -> np.ndarray:
        return np.concatenate([self.eps_alpha, self.eps_beta])

    @property
    def spins(self) -> np.ndarray:
        return np.repeat([0, 1], self.n_spatial)

    @property
    def occupied(self) -> np.ndarray:
        n = self.n_spatial
        return np.concatenate([np.arange(self.n_alpha), n + np.arange(self.n_beta)])

    @property
    def occupation(self) -> int:
        """Bitmask over spin-orbitals; bit ``k`` set when orbital ``k`` is occupied."""
        return int(sum(1 << int(k) for k in self.occupied))


def densities(c_alpha, c_beta, n_alpha, n_beta):
    ca = c_alpha[:, :n_alpha]
    cb = c_beta[:, :n_beta]
    return ca @ ca.T, cb @ cb.T


def fock_matrices(ints: IntegralSet, pa, pb):
    J = np.einsum("pqrs,rs->pq", ints.eri, pa + pb)
    Ka = np.einsum("prqs,rs->pq", ints.eri, pa)
    Kb = np.einsum("prqs,rs->pq", ints.eri, pb)
    h = ints.hcore
    return h + J - Ka, h + J - Kb


def uhf_energy(ints: IntegralSet, pa, pb) -> float:
    fa, fb = fock_matrices(ints, pa, pb)
    h = ints.hcore
    return float(0.5 * np.sum((h + fa) * pa) + 0.5 * np.sum((h + fb) * pb) + ints.e_nuc)


def determinant_s_squared(S_A, c_alpha, c_beta, n_alpha, n_beta) -> float:
    """<S^2> of a UHF determinant."""
    sz = 0.5 * (n_alpha - n_beta)
    ov = c_alpha[:, :n_alpha].T @ S_A @ c_beta[:, :n_beta]
    return float(sz * (sz + 1) + n_beta - np.sum(ov**2))


def determinant_overlap(S_A, first: SCFSolution, second: SCFSolution) -> float:
    """<Phi_1|Phi_2> for two real determinants with equal spin counts."""
    oa = first.c_alpha[:, : first.n_alpha].T @ S_A @ second.c_alpha[:, : second.n_alpha]
    ob = first.c_beta[:, : first.n_beta].T @ S_A @ second.c_beta[:, : second.n_beta]
    da = np.linalg.det(oa) if oa.size else 1.0
    db = np.linalg.det(ob) if ob.size else 1.0
    return float(da * db)


def orbital_gradient(ints: IntegralSet, c_alpha, c_beta, n_alpha, n_beta) -> np.ndarray:
    """Virtual-occupied Fock blocks of both spins, flattened."""
    pa, pb = densities(c_alpha, c_beta, n_alpha, n_beta)
    fa, fb = fock_matrices(ints, pa, pb)
    ga = (c_alpha.T @ fa @ c_alpha)[n_alpha:, :n_alpha]
    gb = (c_beta.T @ fb @ c_beta)[n_beta:, :n_beta]
    return np.concatenate([ga.ravel(), gb.ravel()])


def _restricted_gradient(ints, c, n_occ):
    p = c[:, :n_occ] @ c[:, :n_occ].T
    f, _ = fock_matrices(ints, p, p)
    return (c.T @ f @ c)[n_occ:, :n_occ].ravel()


def fix_phases(c: np.ndarray) -> np.ndarray:
    """Scale each column so its largest-magnitude entry is positive."""
    c = c.copy()
    for k in range(c.shape[1]):
        col = c[:, k]
        big = np.max(np.abs(col))
        idx = int(np.argmax(np.abs(col) > big - 1e-6))
        if col[idx] < 0:
            c[:, k] = -col
    return c


def _canonical_block(c, f):
    w, v = np.linalg.eigh(c.T @ f @ c)
    return w, c @ v


def canonicalize(ints: IntegralSet, c_alpha, c_beta, n_alpha, n_beta):
    """Diagonalize the Fock operator separately in occupied and virtual spaces."""
    pa, pb = densities(c_alpha, c_beta, n_alpha, n_beta)
    fa, fb = fock_matrices(ints, pa, pb)
    out = []
    for c, f, n_occ in ((c_alpha, fa, n_alpha), (c_beta, fb, n_beta)):
        eo, co = _canonical_block(c[:, :n_occ], f)
        ev, cv = _canonical_block(c[:, n_occ:], f)
        out.append((np.concatenate([eo, ev]), fix_phases(np.hstack([co, cv]))))
    (ea, ca), (eb, cb) = out
    return ca, cb, ea, eb


def _finish(ints, c_alpha, c_beta, n_alpha, n_beta, *, converged, iterations,
            mode, flags=(), guess_overlap=1.0) -> SCFSolution:
    ca, cb, ea, eb = canonicalize(ints, c_alpha, c_beta, n_alpha, n_beta)
    if mode == "restricted":
        cb, eb = ca.copy(), ea.copy()
    pa, pb = densities(ca, cb, n_alpha, n_beta)
    grad = orbital_gradient(ints, ca, cb, n_alpha, n_beta)
    return SCFSolution(
        c_alpha=ca, c_beta=cb, eps_alpha=ea, eps_beta=eb,
        n_alpha=n_alpha, n_beta=n_beta, energy=uhf_energy(ints, pa, pb),
        converged=converged, gradient_norm=float(np.linalg.norm(grad)),
        s_squared=determinant_s_squared(ints.overlap, ca, cb, n_alpha, n_beta),
        mode=mode, iterations=iterations, flags=tuple(flags),
        guess_overlap=guess_overlap,
    )


def _core_guess(ints):
    w, v = scipy.linalg.eigh(ints.hcore, ints.overlap)
    return v


def run_scf(
    ints: IntegralSet,
    guess=None,
    mode: str = "unrestricted",
    n_alpha: int = 1,
    n_beta: int = 0,
    *,
    max_iter: int = MAX_ITER,
    tol: float = GRADIENT_TOL,
    diis_size: int = DIIS_SIZE,
) -> SCFSolution:
    """Self-consistent field iterations with DIIS and a damping fallback.

    ``guess`` is ``None`` (core Hamiltonian), a pair of coefficient matrices,
    or an :class:`SCFSolution`. Raises :class:`SCFConvergenceError` when the
    orbital gradient stays above ``tol`` after ``max_iter`` iterations.
    """
    if mode not in ("restricted", "unrestricted"):
        raise ValueError(f"unknown SCF mode {mode!r}")
    n = ints.n
    if n_alpha > n or n_beta > n or n_alpha < 0 or n_beta < 0:
        raise ValueError("more electrons of one spin than spatial orbitals")
    if mode == "restricted" and n_alpha != n_beta:
        raise ValueError("restricted mode requires a closed shell")
    if guess is None:
        ca = cb = _core_guess(ints)
    elif isinstance(guess, SCFSolution):
        ca, cb = guess.c_alpha, guess.c_beta
    else:
        ca, cb = guess
    if mode == "restricted":
        cb = ca

    S = ints.overlap
    w, v = np.linalg.eigh(S)
    X = v @ np.diag(w**-0.5) @ v.T
    pa, pb = densities(ca, cb, n_alpha, n_beta)
    if mode == "restricted":
        pb = pa = 0.5 * (pa + pb)

    focks, errors = [], []
    grad_norm = np.inf
    damping = 0.0
    history = []
    for it in range(1, max_iter + 1):
        fa, fb = fock_matrices(ints, pa, pb)
        if mode == "restricted":
            fa = fb = 0.5 * (fa + fb)
        ea = X.T @ (fa @ pa @ S - S @ pa @ fa) @ X
        eb = X.T @ (fb @ pb @ S - S @ pb @ fb) @ X
        err = np.concatenate([ea.ravel(), eb.ravel()])
        grad_norm = float(np.linalg.norm(err))
        history.append(grad_norm)
        if grad_norm < 0.1 * tol:
            break
        focks.append((fa, fb))
        errors.append(err)
        if len(focks) > diis_size:
            focks.pop(0)
            errors.pop(0)
        stalled = len(history) > 30 and min(history[-10:]) > 0.5 * min(history[:-10])
        if stalled and damping == 0.0:
            damping = 0.5
            focks.clear()
            errors.clear()
        if damping == 0.0 and len(focks) > 1:
            m = len(focks)
            B = -np.ones((m + 1, m + 1))
            B[-1, -1] = 0.0
            B[:m, :m] = [[ei @ ej for ej in errors] for ei in errors]
            rhs = np.zeros(m + 1)
            rhs[-1] = -1.0
            try:
                coef = np.linalg.solve(B, rhs)[:m]
            except np.linalg.LinAlgError:
                coef = np.zeros(m)
                coef[-1] = 1.0
            fa = sum(c * f[0] for c, f in zip(coef, focks))
            fb = sum(c * f[1] for c, f in zip(coef, focks))
        _, ca = scipy.linalg.eigh(fa, S)
        _, cb = scipy.linalg.eigh(fb, S)
        new_pa, new_pb = densities(ca, cb, n_alpha, n_beta)
        if mode == "restricted":
            new_pb = new_pa
        pa = damping * pa + (1 - damping) * new_pa
        pb = damping * pb + (1 - damping) * new_pb

    fa, fb = fock_matrices(ints, pa, pb)
    _, ca = scipy.linalg.eigh(fa, S)
    _, cb = scipy.linalg.eigh(fb, S)
    if mode == "restricted":
        cb = ca
    grad = orbital_gradient(ints, ca, cb, n_alpha, n_beta)
    if np.linalg.norm(grad) >= tol:
        # tighten with the gradient-norm minimizer before giving up
        try:
            sol = polish_reference(
                ints, (ca, cb, n_alpha, n_beta), restricted=(mode == "restricted"), tol=tol
            )
            return replace(sol, iterations=it)
        except SCFConvergenceError:
            pass
        raise SCFConvergenceError(
            f"SCF did not converge in {max_iter} iterations",
            {"gradient_norm": float(np.linalg.norm(grad)), "history": history},
        )
    return _finish(ints, ca, cb, n_alpha, n_beta, converged=True, iterations=it, mode=mode)


def _rotate(c, kappa, n_occ):
    n = c.shape[1]
    nv = n - n_occ
    k = np.zeros((n, n))
    k[n_occ:, :n_occ] = kappa.reshape(nv, n_occ)
    k[:n_occ, n_occ:] = -kappa.reshape(nv, n_occ).T
    return c @ scipy.linalg.expm(k)


def _occupied_overlap(S, c1, c2, n_occ):
    if n_occ == 0:
        return 1.0
    return abs(np.linalg.det(c1[:, :n_occ].T @ S @ c2[:, :n_occ]))


def _minimize_square_gradient(residual, x0, tol):
    """Levenberg-Marquardt on the gradient residual with a short first step."""
    if x0.size == 0:
        return x0
    x = x0
    for _ in range(4):
        x = leastsq(residual, x, factor=0.1, xtol=1e-15, ftol=1e-15, gtol=0.0,
                    maxfev=4000 * (x0.size + 1))[0]
        if np.linalg.norm(residual(x)) < 0.1 * tol:
            break
    return x


def _closed_shell_candidate(ints, ca, cb, n_occ, tol):
    """Restricted stationary point built from bonding pairs of guess orbitals.

    Each occupied alpha orbital is paired with the occupied beta orbital it
    couples to most strongly through the core Hamiltonian, and the pair is
    combined with the sign that lowers the one-electron energy.
    """
    S = ints.overlap
    a, b = ca[:, :n_occ], cb[:, :n_occ]
    coupling = a.T @ ints.hcore @ b
    rows, cols = linear_sum_assignment(-np.abs(coupling))
    occ = a[:, rows] - b[:, cols] * np.sign(coupling[rows, cols] + 0.0)
    c = _complete(S, _orthonormalize(S, occ))
    x = _minimize_square_gradient(
        lambda y: _restricted_gradient(ints, _rotate(c, y, n_occ), n_occ),
        np.zeros((c.shape[1] - n_occ) * n_occ), tol,
    )
    c = _rotate(c, x, n_occ)
    if np.linalg.norm(_restricted_gradient(ints, c, n_occ)) >= tol:
        return None
    return c


def polish_reference(ints: IntegralSet, guess, *, restricted: bool = False,
                     tol: float = GRADIENT_TOL) -> SCFSolution:
    """Relax ``guess`` to the nearest stationary point of the HF energy.

    The squared orbital gradient is minimized over occupied-virtual rotation
    parameters with Levenberg-Marquardt, so saddle points are reached as
    readily as minima. ``guess`` is an :class:`SCFSolution` or a tuple
    ``(c_alpha, c_beta, n_alpha, n_beta)`` with occupied columns first.
    """
    if isinstance(guess, SCFSolution):
        c0a, c0b, na, nb = guess.c_alpha, guess.c_beta, guess.n_alpha, guess.n_beta
    else:
        c0a, c0b, na, nb = guess
    n = c0a.shape[1]
    size_a = (n - na) * na
    S = ints.overlap

    if restricted:
        if na != nb:
            raise ValueError("restricted polish requires a closed shell")

        def residual(x):
            return _restricted_gradient(ints, _rotate(c0a, x, na), na)

        x0 = np.zeros(size_a)
    else:

        def residual(x):
            ca = _rotate(c0a, x[:size_a], na)
            cb = _rotate(c0b, x[size_a:], nb)
            return orbital_gradient(ints, ca, cb, na, nb)

        x0 = np.zeros(size_a + (n - nb) * nb)

    x = _minimize_square_gradient(residual, x0, tol)
    ca = _rotate(c0a, x[:size_a], na)
    cb = ca if restricted else _rotate(c0b, x[size_a:], nb)
    grad = np.linalg.norm(orbital_gradient(ints, ca, cb, na, nb))
    if grad >= tol and not restricted and na == nb:
        # collapse onto a closed shell makes the unrestricted Jacobian singular;
        # finish in the restricted parametrization where it is regular
        if determinant_s_squared(S, ca, cb, na, nb) < 1e-6:
            pa, pb = densities(ca, cb, na, nb)
            w, v = scipy.linalg.eigh(S @ (0.5 * (pa + pb)) @ S, S)
            cr = v[:, ::-1]
            xr = _minimize_square_gradient(
                lambda y: _restricted_gradient(ints, _rotate(cr, y, na), na),
                np.zeros(size_a), tol,
            )
            ca = cb = _rotate(cr, xr, na)
            grad = np.linalg.norm(orbital_gradient(ints, ca, cb, na, nb))
    if grad >= tol:
        raise SCFConvergenceError(
            "squared-gradient minimization did not reach a stationary point",
            {"gradient_norm": float(grad)},
        )
    ov = _occupied_overlap(S, c0a, ca, na) * _occupied_overlap(S, c0b, cb, nb)
    if not restricted and na == nb and na > 1 and determinant_s_squared(S, ca, cb, na, nb) < 1e-6:
        # several closed shells can attract a broken-symmetry guess; keep the
        # one whose occupied space is closest to the guess, then the lowest
        options = [(ov, uhf_energy(ints, *densities(ca, cb, na, nb)), ca, cb)]
        c = _closed_shell_candidate(ints, c0a, c0b, na, tol)
        if c is not None:
            ov_c = _occupied_overlap(S, c0a, c, na) * _occupied_overlap(S, c0b, c, nb)
            options.append((ov_c, uhf_energy(ints, *densities(c, c, na, nb)), c, c))
        best = max(o[0] for o in options)
        ov, _, ca, cb = min((o for o in options if o[0] > best - 1e-6), key=lambda o: o[1])
    flags = ("drift",) if ov < 0.5 else ()
    if flags:
        log.info("polished reference drifted from its guess (overlap %.3f)", ov)
    return _finish(ints, ca, cb, na, nb, converged=True, iterations=0,
                   mode="restricted" if restricted else "unrestricted",
                   flags=flags, guess_overlap=float(ov))


def mulliken_populations(ints: IntegralSet, c: np.ndarray, n_sites: int) -> np.ndarray:
    """Per-orbital, per-atom Mulliken populations, shape ``(n_orb, n_sites)``."""
    sc = ints.overlap @ c
    per_ao = c * sc
    pops = np.zeros((c.shape[1], n_sites))
    for mu, atom in enumerate(ints.ao_centers):
        pops[:, atom] += per_ao[mu]
    return pops


def boys_localize(ints: IntegralSet, c: np.ndarray, *, max_sweeps: int = 200,
                  tol: float = 1e-12) -> np.ndarray:
    """Foster-Boys localization by Jacobi sweeps over orbital pairs."""
    c = c.copy()
    m = c.shape[1]
    if m < 2:
        return c
    for _ in range(max_sweeps):
        r = np.einsum("xuv,ui,vj->xij", ints.dipole, c, c)
        changed = 0.0
        for i, j in itertools.combinations(range(m), 2):
            r = np.einsum("xuv,ui,vj->xij", ints.dipole, c[:, [i, j]], c[:, [i, j]])
            rii, rjj, rij = r[:, 0, 0], r[:, 1, 1], r[:, 0, 1]
            a = rij @ rij - 0.25 * (rii - rjj) @ (rii - rjj)
            b = rij @ (rii - rjj)
            if np.hypot(a, b) < 1e-14:
                continue
            theta = 0.25 * np.arctan2(b, -a)
            if abs(theta) < tol:
                continue
            ct, st = np.cos(theta), np.sin(theta)
            ci, cj = c[:, i].copy(), c[:, j].copy()
            c[:, i] = ct * ci + st * cj
            c[:, j] = -st * ci + ct * cj
            changed = max(changed, abs(theta))
        if changed < tol:
            break
    return c


def boys_spread(ints: IntegralSet, c: np.ndarray) -> float:
    """Sum of squared orbital centroids (the quantity Foster-Boys maximizes)."""
    cent = np.einsum("xuv,ui,vi->ix", ints.dipole, c, c)
    return float(np.sum(cent**2))


@dataclass(frozen=True)
class LocalizedOrbitals:
    coefficients: np.ndarray  # n x d, column k sits on site ``sites[k]``
    sites: tuple[int, ...]
    populations: np.ndarray


def localize_orbitals(solution: SCFSolution, ints: IntegralSet, n_sites: int) -> LocalizedOrbitals:
    """Localize the occupied alpha orbitals of a high-spin solution onto sites.

    Columns come back sorted by site index. Raises :class:`LocalizationError`
    unless every orbital has at least 0.7 Mulliken population on one site and
    the sites are distinct.
    """
    occ = solution.c_alpha[:, : solution.n_alpha]
    loc = boys_localize(ints, occ)
    pops = mulliken_populations(ints, loc, n_sites)
    sites = []
    for k in range(loc.shape[1]):
        owner = np.flatnonzero(pops[k] >= LOCALIZATION_THRESHOLD)
        if len(owner) != 1:
            raise LocalizationError(f"orbital {k} is not localized on a single site")
        sites.append(int(owner[0]))
    if len(set(sites)) != len(sites):
        raise LocalizationError("two localized orbitals share a site")
    order = np.argsort(sites)
    loc = fix_phases(loc[:, order])
    return LocalizedOrbitals(loc, tuple(int(s) for s in np.array(sites)[order]), pops[order])


def spin_patterns(d: int, n_alpha: int, n_beta: int | None = None) -> list[str]:
    """All site spin assignments as strings over ``a``/``b`` (and ``-`` for empty).

    Patterns with site 0 spin-up come first in lexicographic order of the
    alpha sites, followed by the remaining ones, so spin-flip partners of the
    balanced case sit ``M/2`` apart.
    """
    if n_beta is None:
        n_beta = d - n_alpha
    if n_alpha + n_beta > d or min(n_alpha, n_beta) < 0:
        raise ValueError("too many electrons for the radical sites")
    out = []
    for alpha_sites in itertools.combinations(range(d), n_alpha):
        rest = [s for s in range(d) if s not in alpha_sites]
        for beta_sites in itertools.combinations(rest, n_beta):
            pat = ["-"] * d
            for s in alpha_sites:
                pat[s] = "a"
            for s in beta_sites:
                pat[s] = "b"
            out.append("".join(pat))
    if n_alpha == n_beta and n_alpha + n_beta == d:
        first = [p for p in out if p[0] == "a"]
        flip = str.maketrans("ab", "ba")
        return first + [p.translate(flip) for p in first]
    return out


def _complete(S, occ):
    """Extend S-orthonormal columns ``occ`` to a full S-orthonormal basis."""
    w, v = np.linalg.eigh(S)
    half = v @ np.diag(np.sqrt(w)) @ v.T
    inv_half = v @ np.diag(1 / np.sqrt(w)) @ v.T
    o = half @ occ
    proj = np.eye(S.shape[0]) - o @ o.T
    pw, pv = np.linalg.eigh(proj)
    virt = pv[:, pw > 0.5]
    return np.hstack([occ, inv_half @ virt])


def _orthonormalize(S, c):
    m = c.T @ S @ c
    w, v = np.linalg.eigh(m)
    return c @ v @ np.diag(w**-0.5) @ v.T


def pattern_guess(ints: IntegralSet, loc: LocalizedOrbitals, pattern: str):
    """Broken-symmetry starting orbitals for one site spin pattern."""
    S = ints.overlap
    by_site = {s: loc.coefficients[:, k] for k, s in enumerate(loc.sites)}
    a_cols = [by_site[s] for s, ch in enumerate(pattern) if ch == "a"]
    b_cols = [by_site[s] for s, ch in enumerate(pattern) if ch == "b"]
    n = S.shape[0]
    ca = _orthonormalize(S, np.array(a_cols).T) if a_cols else np.zeros((n, 0))
    cb = _orthonormalize(S, np.array(b_cols).T) if b_cols else np.zeros((n, 0))
    return _complete(S, ca), _complete(S, cb), len(a_cols), len(b_cols)


@dataclass(frozen=True)
class ReferenceSet:
    references: tuple[SCFSolution, ...]
    spin_configs: tuple[str, ...]
    d: int
    m_s: float
    high_spin: SCFSolution | None = None
    collapsed: tuple[tuple[int, int], ...] = field(default=())

    @property
    def M(self) -> int:
        return len(self.references)


def reference_count(d: int, n_alpha: int, n_beta: int) -> int:
    from math import factorial

    if n_alpha + n_beta > d:
        raise ValueError("too many electrons for the radical sites")
    return factorial(d) // (factorial(n_alpha) * factorial(n_beta) * factorial(d - n_alpha - n_beta))


def generate_references(ints: IntegralSet, mol: Molecule, m_s: float | None = None) -> ReferenceSet:
    """Spin-permuted UHF references for a hydrogen cluster."""
    if m_s is None:
        m_s = mol.m_s
    d = mol.n_radical_sites
    eta = mol.n_electrons
    if eta > d:
        raise ValueError("every electron must sit on a radical site")
    n_alpha = (eta + round(2 * m_s)) // 2
    n_beta = eta - n_alpha

    high = None
    last_err = None
    for guess in (None, "sites"):
        try:
            if guess is None:
                high = run_scf(ints, None, "unrestricted", eta, 0)
            else:
                # start from the AO functions themselves when the core guess stalls
                c = _complete(ints.overlap, np.zeros((ints.n, 0)))
                high = run_scf(ints, (c, c), "unrestricted", eta, 0)
            break
        except SCFConvergenceError as exc:
            last_err = exc
    if high is None:
        raise last_err
    loc = localize_orbitals(high, ints, len(mol.atoms))

    refs, patterns = [], spin_patterns(d, n_alpha, n_beta)
    for pat in patterns:
        ca, cb, na, nb = pattern_guess(ints, loc, pat)
        refs.append(polish_reference(ints, (ca, cb, na, nb)))

    collapsed = []
    for i, j in itertools.combinations(range(len(refs)), 2):
        if abs(determinant_overlap(ints.overlap, refs[i], refs[j])) > 1 - DUPLICATE_TOL:
            collapsed.append((i, j))
    if collapsed:
        log.info("collapsed reference pairs: %s", collapsed)
    return ReferenceSet(tuple(refs), tuple(patterns), d, m_s, high, tuple(collapsed))


def restricted_partner(ints: IntegralSet, ref: SCFSolution) -> SCFSolution:
    """Closed-shell stationary point reached from a reference's spin-averaged density."""
    pa, pb = densities(ref.c_alpha, ref.c_beta, ref.n_alpha, ref.n_beta)
    p = 0.5 * (pa + pb)
    S = ints.overlap
    # natural orbitals of the averaged density, most occupied first
    w, v = scipy.linalg.eigh(S @ p @ S, S)
    c = v[:, ::-1]
    return polish_reference(ints, (c, c, ref.n_alpha, ref.n_beta), restricted=True)


def symmetry_breaking_energy(ints: IntegralSet, mol: Molecule, pattern_index: int = 0) -> float:
    """E(restricted partner) - E(polished broken-symmetry reference)."""
    refs = generate_references(ints, mol)
    ref = refs.references[pattern_index]
    if ref.s_squared < 1e-8:
        return 0.0
    return restricted_partner(ints, ref).energy - ref.energy


def detect_cf_point(gap_at, grid, *, threshold: float = 1e-8, resolution: float = 0.005) -> float:
    """Smallest distance where ``gap_at(R) > threshold``, refined by bisection.

    ``gap_at`` returns the energy lowering of the broken-symmetry solution
    relative to its restricted partner at distance ``R`` (angstrom).
    """
    grid = list(grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("distance grid must be increasing")
    prev = None
    for R in grid:
        if gap_at(R) > threshold:
            if prev is None:
                raise ValueError("symmetry already broken at the first grid point")
            lo, hi = prev, R
            while hi - lo > resolution:
                mid = 0.5 * (lo + hi)
                if gap_at(mid) > threshold:
                    hi = mid
                else:
                    lo = mid
            return 0.5 * (lo + hi)
        prev = R
    raise ValueError("no symmetry-breaking transition in the scanned range")


__all__ = [
    "BOHR_IN_ANGSTROM",
    "SCFSolution",
    "ReferenceSet",
    "SCFConvergenceError",
    "LocalizationError",
    "run_scf",
    "polish_reference",
    "localize_orbitals",
    "generate_references",
    "detect_cf_point",
    "spin_patterns",
    "reference_count",
]
