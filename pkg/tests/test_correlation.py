from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import find_record
from noqe import chem
from noqe.correlation import (
    NearZeroDenominator,
    ScalingScheme,
    build_supermatrix,
    correlation_energy,
    dump_amplitudes,
    load_amplitudes,
    mp2_amplitudes,
    scale_amplitudes,
    slot_rank,
)
from noqe.fock import cluster_generator, excitation_matrices
from noqe.integrals import compute_integrals, mo_transform
from noqe.scf import run_scf


def _restricted(r, basis, system="h2"):
    mol = chem.h2(r) if system == "h2" else chem.h4_square(r)
    ints = compute_integrals(chem.basis_for(mol, basis), mol)
    n = mol.n_alpha
    sol = run_scf(ints, None, "restricted", n, n)
    mo = mo_transform(ints, sol.coefficients)
    return sol, mo


@pytest.mark.parametrize("basis,r", [("STO-3G", 0.5), ("6-31G", 0.75), ("6-311G", 1.2), ("6-311G", 2.5)])
def test_mp2_energy_matches_third_party(pyscf_records, basis, r):
    rec = find_record(pyscf_records, "h2", basis, r)
    sol, mo = _restricted(r, basis)
    amps = mp2_amplitudes(mo, sol.eps, sol.occupied)
    assert amps.energy == pytest.approx(rec["e_mp2_corr"], abs=1e-9)
    assert correlation_energy(amps, mo) == pytest.approx(amps.energy, abs=1e-14)


@pytest.fixture(scope="module")
def h2_amps():
    sol, mo = _restricted(0.75, "6-31G")
    return mo, mp2_amplitudes(mo, sol.eps, sol.occupied)


def test_amplitude_antisymmetry_and_support(h2_amps):
    _, amps = h2_amps
    t = amps.t
    np.testing.assert_allclose(t, -t.transpose(1, 0, 2, 3), atol=1e-14)
    np.testing.assert_allclose(t, -t.transpose(0, 1, 3, 2), atol=1e-14)
    occ = list(amps.occupied)
    vir = list(amps.virtual)
    mask = np.zeros(t.shape, bool)
    mask[np.ix_(vir, vir, occ, occ)] = True
    assert np.all(t[~mask] == 0)
    s = amps.spins
    spin_bad = (s[:, None, None, None] + s[None, :, None, None]) != (s[None, None, :, None] + s[None, None, None, :])
    assert np.all(t[spin_bad] == 0)


@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_scaling_is_classwise_linear(h2_amps, c_ss, c_os):
    mo, amps = h2_amps
    scaled = scale_amplitudes(amps, ScalingScheme("scs", c_ss, c_os))
    same = amps.same_spin_mask()
    np.testing.assert_allclose(scaled.t[same], c_ss * amps.t[same])
    np.testing.assert_allclose(scaled.t[~same], c_os * amps.t[~same])


def test_uniform_scaling_scales_energy(h2_amps):
    mo, amps = h2_amps
    scaled = scale_amplitudes(amps, ScalingScheme.uniform(1.3))
    assert correlation_energy(scaled, mo) == pytest.approx(1.3 * amps.energy)
    sos = scale_amplitudes(amps, ScalingScheme.sos())
    assert np.all(sos.t[amps.same_spin_mask()] == 0)


@pytest.mark.parametrize("text,expected", [
    ("1.3", ScalingScheme("uniform", 1.3, 1.3)),
    ("uniform:1.2", ScalingScheme("uniform", 1.2, 1.2)),
    ("scs:0.33,1.2", ScalingScheme("scs", 0.33, 1.2)),
    ("scs", ScalingScheme("scs", 0.33, 1.2)),
    ("sos:1.3", ScalingScheme("sos", 0.0, 1.3)),
])
def test_scheme_parse(text, expected):
    assert ScalingScheme.parse(text) == expected


@given(st.sampled_from(["uniform", "scs", "sos"]), st.floats(0, 3), st.floats(0, 3))
def test_scheme_label_round_trip(kind, a, b):
    scheme = {"uniform": ScalingScheme.uniform(a), "scs": ScalingScheme.scs(a, b), "sos": ScalingScheme.sos(b)}[kind]
    back = ScalingScheme.parse(scheme.label())
    assert back.kind == scheme.kind
    assert back.c_ss == pytest.approx(scheme.c_ss, rel=1e-5)
    assert back.c_os == pytest.approx(scheme.c_os, rel=1e-5)


@pytest.mark.parametrize("bad", ["scs:x", "magic:1", "uniform:-1"])
def test_scheme_parse_rejects(bad):
    with pytest.raises(ValueError):
        ScalingScheme.parse(bad)


def test_slot_rank_orders():
    spins = np.repeat([0, 1], 3)
    assert list(slot_rank(spins, "block")) == [0, 1, 2, 3, 4, 5]
    assert list(slot_rank(spins, "interleaved")) == [0, 2, 4, 1, 3, 5]
    with pytest.raises(ValueError):
        slot_rank(spins, "random")


@pytest.mark.parametrize("order", ["interleaved", "block"])
def test_supermatrix_reproduces_cluster_operator(h2_amps, order):
    _, amps = h2_amps
    sm = build_supermatrix(amps, order)
    N = amps.N
    # every symmetry-unique amplitude sits in exactly one slot
    assert np.count_nonzero(sm.T) == np.count_nonzero(amps.t) // 4
    eta = len(amps.occupied)
    E = excitation_matrices(N, eta)
    # 1/4 sum t[a,b,i,j] a+_a a+_b a_j a_i = 1/4 sum t E_ai E_bj for a, b virtual
    T = 0.25 * np.einsum("abij,aixy,bjyz->xz", amps.t, E, E, optimize=True)
    gen = cluster_generator(sm).matrix(eta)
    np.testing.assert_allclose(gen, T - T.T, atol=1e-12)


def test_near_zero_denominator():
    sol, mo = _restricted(0.75, "STO-3G")
    eps = sol.eps.copy()
    eps[:] = 0.0
    with pytest.raises(NearZeroDenominator) as info:
        mp2_amplitudes(mo, eps, sol.occupied)
    assert len(info.value.quadruple) == 4


def test_amplitude_file_round_trip(h2_amps, tmp_path):
    _, amps = h2_amps
    path = tmp_path / "t.txt"
    dump_amplitudes(amps, path)
    back = load_amplitudes(path, amps.spins, amps.occupied)
    np.testing.assert_array_equal(back.t, amps.t)


def test_mp2_amplitude_energy_is_third_order_exact():
    """With amplitudes scaled by lam the expectation energy is
    E_HF + 2 lam E2 + lam^2 (E3 - E2) + O(lam^3), and the O(lam^3) remainder
    is fourth order in the fluctuation potential."""
    from oracles import mp3_energy
    from noqe.fock import apply_cluster_exact, build_hamiltonian, encode_reference

    sol, mo = _restricted(0.74, "STO-3G")
    amps = mp2_amplitudes(mo, sol.eps, sol.occupied)
    e3 = mp3_energy(mo, sol.eps, sol.occupied)
    H = build_hamiltonian(mo)
    ref = encode_reference(sol.occupation, amps.N)
    residuals = []
    for lam in (0.125, 0.25, 0.5, 1.0):
        scaled = scale_amplitudes(amps, ScalingScheme.uniform(lam))
        energy = H.expectation(apply_cluster_exact(ref, build_supermatrix(scaled))).real
        model = sol.energy + 2 * lam * amps.energy + lam**2 * (e3 - amps.energy)
        residuals.append((energy - model) / lam**3)
    # remainder / lam^3 is smooth (affine at this size) and never blows up
    steps = np.diff(residuals)
    np.testing.assert_allclose(steps[1:] / steps[:-1], 2.0, rtol=0.1)
    assert max(abs(r) for r in residuals) < abs(e3) / 10
