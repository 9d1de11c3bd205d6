"""Independent reference computations shared by the unit and acceptance tests."""

from __future__ import annotations

from itertools import combinations

import numpy as np
import scipy.linalg

from noqe.correlation import ClusterSupermatrix
from noqe.fock import (
    apply_cluster_exact,
    apply_orbital_rotation,
    build_hamiltonian,
    encode_reference,
    hadamard_test_oracle,
    matrix_elements,
)
from noqe.integrals import MOIntegrals, antisymmetrized_eri


def random_unitary(rng, N):
    K = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    return scipy.linalg.expm(0.5 * (K - K.conj().T))


def random_hamiltonian(rng, N):
    h = rng.normal(size=(N, N))
    h = 0.5 * (h + h.T)
    g = rng.normal(size=(N,) * 4) * 0.2
    g = 0.5 * (g + g.transpose(2, 3, 0, 1))
    mo = MOIntegrals(h, g, np.repeat([0, 1], N // 2), float(rng.normal()))
    return build_hamiltonian(mo)


def random_instance(seed):
    """Two references, two preparation maps and a Hamiltonian on ``N <= 6`` modes."""
    rng = np.random.default_rng(seed)
    N = int(rng.choice([2, 4, 6]))
    eta = int(rng.integers(1, N))
    occs = [sum(1 << int(p) for p in rng.choice(N, eta, replace=False)) for _ in range(2)]
    refs = [encode_reference(o, N, basis=j) for j, o in enumerate(occs)]
    H = random_hamiltonian(rng, N)

    def make_prep():
        T = np.zeros((N * N, N * N))
        T[rng.integers(0, N * N, 4), rng.integers(0, N * N, 4)] = rng.normal(size=4) * 0.3
        sm = ClusterSupermatrix(T, N)
        U = random_unitary(rng, N)
        return lambda v: apply_orbital_rotation(apply_cluster_exact(v, sm), U, "common")

    return refs, [make_prep(), make_prep()], H


def direct_and_oracle(seed):
    (ref_I, ref_J), (prep_I, prep_J), H = random_instance(seed)
    h, s = matrix_elements(prep_I(ref_I), prep_J(ref_J), H)
    hr, sr = hadamard_test_oracle(ref_I, ref_J, prep_I, prep_J, H, "real")
    hi, si = hadamard_test_oracle(ref_I, ref_J, prep_I, prep_J, H, "imag")
    return (h, s), (complex(hr, hi), complex(sr, si))


def mp3_energy(mo, eps, occupied):
    """Third-order Moller-Plesset correction by explicit loops over spin-orbitals."""
    A = antisymmetrized_eri(mo)
    occ = list(occupied)
    vir = [p for p in range(mo.n) if p not in occ]
    D = lambda i, j, a, b: eps[i] + eps[j] - eps[a] - eps[b]
    e3 = 0.0
    for i in occ:
        for j in occ:
            for a in vir:
                for b in vir:
                    for k in occ:
                        for l in occ:
                            e3 += A[i, j, a, b] * A[k, l, i, j] * A[a, b, k, l] / (D(i, j, a, b) * D(k, l, a, b)) / 8
                    for c in vir:
                        for d in vir:
                            e3 += A[i, j, a, b] * A[a, b, c, d] * A[c, d, i, j] / (D(i, j, a, b) * D(i, j, c, d)) / 8
                    for k in occ:
                        for c in vir:
                            e3 += A[i, j, a, b] * A[k, b, c, j] * A[a, c, i, k] / (D(i, j, a, b) * D(i, k, a, c))
    return e3


def cluster_operator_brute_force(t, occupied, N):
    """``tau`` on the full ``2^N`` space from explicit ladder-operator products."""
    dim = 1 << N

    def ladder(p, create):
        m = np.zeros((dim, dim))
        for x in range(dim):
            occ = (x >> p) & 1
            if occ == (0 if create else 1):
                sign = (-1) ** bin(x & ((1 << p) - 1)).count("1")
                m[x ^ (1 << p), x] = sign
        return m

    cr = [ladder(p, True) for p in range(N)]
    an = [ladder(p, False) for p in range(N)]
    T = np.zeros((dim, dim))
    vir = [p for p in range(N) if p not in occupied]
    for a, b in combinations(vir, 2):
        for i, j in combinations(occupied, 2):
            T += t[a, b, i, j] * cr[a] @ cr[b] @ an[j] @ an[i]
    return T - T.T
