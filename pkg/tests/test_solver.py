from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import random_hamiltonian
from noqe.fock import FockVector, sector
from noqe.solver import (
    EmptySubspace,
    MissingState,
    NOQEResult,
    SubspaceMatrices,
    assemble,
    assemble_pairwise,
    combine,
    infidelity,
    label_states,
    solve,
    spin_gap,
    spin_label,
)


def _random_states(rng, N, eta, M):
    dets = sector(N, eta).dets
    out = []
    for _ in range(M):
        amps = np.zeros(1 << N, complex)
        amps[dets] = rng.normal(size=len(dets)) + 1j * rng.normal(size=len(dets))
        out.append(FockVector(amps / np.linalg.norm(amps), N, "common"))
    return out


def test_orthonormal_subspace_is_plain_eigh():
    rng = np.random.default_rng(0)
    H = rng.normal(size=(4, 4))
    H = H + H.T
    res = solve(SubspaceMatrices(H, np.eye(4)))
    np.testing.assert_allclose(res.energies, np.linalg.eigvalsh(H), atol=1e-12)
    assert res.retained == 4


def test_canonical_orthogonalization_drops_duplicates():
    rng = np.random.default_rng(1)
    H = random_hamiltonian(rng, 4)
    a, b = _random_states(rng, 4, 2, 2)
    sm = assemble([a, b, a], H)
    res = solve(sm, 1e-4)
    assert res.retained == 2
    ref = solve(assemble([a, b], H))
    np.testing.assert_allclose(res.energies, ref.energies, atol=1e-10)
    # normalization c^dagger S c = 1
    c = res.coefficients
    np.testing.assert_allclose(c.conj().T @ sm.S @ c, np.eye(2), atol=1e-10)


def test_empty_subspace():
    with pytest.raises(EmptySubspace):
        solve(SubspaceMatrices(np.zeros((2, 2)), 1e-6 * np.eye(2)))


def test_pairwise_assembly_agrees():
    rng = np.random.default_rng(2)
    H = random_hamiltonian(rng, 4)
    states = _random_states(rng, 4, 2, 3)
    a = assemble(states, H)
    b = assemble_pairwise(lambda i, j: (np.vdot(states[i].amplitudes, H.apply(states[j]).amplitudes),
                                        states[i].inner(states[j])), 3)
    np.testing.assert_allclose(a.H, b.H, atol=1e-12)
    np.testing.assert_allclose(a.S, b.S, atol=1e-12)
    assert a.hermiticity_error() < 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_subspace_energies_interlace(seed, M):
    # Cauchy interlacing: the k-th subspace energy never drops below the k-th exact one
    rng = np.random.default_rng(seed)
    N, eta = 4, 2
    H = random_hamiltonian(rng, N)
    states = _random_states(rng, N, eta, M)
    res = solve(assemble(states, H), 1e-8)
    exact = np.linalg.eigvalsh(H.matrix(eta))
    assert np.all(res.energies >= exact[: len(res.energies)] - 1e-9)


def test_combine_and_infidelity():
    rng = np.random.default_rng(3)
    a, b = _random_states(rng, 4, 2, 2)
    assert infidelity(a, a) == pytest.approx(0.0, abs=1e-12)
    mix = combine([a, b], np.array([1.0, 0.0]))
    assert infidelity(mix, a) == pytest.approx(0.0, abs=1e-12)
    # projection onto a two-dimensional degenerate space
    e1 = np.zeros(16, complex); e1[0b0011] = 1
    e2 = np.zeros(16, complex); e2[0b0101] = 1
    psi = FockVector((e1 + e2) / np.sqrt(2), 4)
    assert infidelity(psi, [FockVector(e1, 4)]) == pytest.approx(0.5)
    assert infidelity(psi, [FockVector(e1, 4), FockVector(e2, 4)]) == pytest.approx(0.0, abs=1e-12)
    other = np.zeros(16, complex); other[0b0001] = 1
    with pytest.raises(ValueError):
        infidelity(psi, FockVector(other, 4))


@pytest.mark.parametrize("s2,label", [(0.0, "S"), (0.05, "S"), (2.0, "T"), (2.09, "T"), (6.0, "Q"),
                                      (5.94, "Q"), (1.0, None), (4.5, None), (0.75, None)])
def test_spin_label(s2, label):
    assert spin_label(s2) == label


def test_label_states_counts_per_class():
    labels = label_states([0.3, 0.1, 0.2, 0.4, 0.5], [2.0, 0.0, 2.0, 0.0, 4.5])
    assert labels == ("T2", "S0", "T1", "S1", "contaminated")


def test_spin_gap_and_missing():
    res = NOQEResult(np.array([-1.0, -0.5]), np.eye(2), 2, np.array([0.0, 2.0]), ("S0", "T1"))
    assert spin_gap(res) == pytest.approx(0.5)
    assert res.energy_of("T1") == -0.5
    with pytest.raises(MissingState):
        res.energy_of("Q1")
    with pytest.raises(MissingState):
        spin_gap(res, ("S0", "S1"))
