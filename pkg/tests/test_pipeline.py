from __future__ import annotations

import numpy as np
import pytest

from noqe.correlation import ScalingScheme
from noqe.pipeline import (
    SimulationMode,
    analyse,
    build_system,
    correlated_states,
    fci_states,
    prepare,
    run_point,
)


@pytest.mark.parametrize("text,expected", [
    ("exact", SimulationMode()),
    ("noci", SimulationMode("noci")),
    ("lowrank:k=2,eps=0.024", SimulationMode("lowrank", 2, 0.024)),
    ("lowrank:k=4,method=svd", SimulationMode("lowrank", 4, 0.0, "svd")),
])
def test_mode_parse(text, expected):
    mode = SimulationMode.parse(text)
    assert mode == expected
    assert SimulationMode.parse(mode.label()) == mode


@pytest.mark.parametrize("bad", ["fast", "lowrank:k=0", "lowrank:eps=-1", "lowrank:q=1", "lowrank:method=qr"])
def test_mode_parse_rejects(bad):
    with pytest.raises(ValueError):
        SimulationMode.parse(bad)


def test_build_system_from_file(tmp_path):
    path = tmp_path / "geom.xyz"
    path.write_text("angstrom\nH 0 0 0\nH 0 0 0.9\n")
    mol = build_system(str(path), 0.0)
    assert mol.n_electrons == 2
    with pytest.raises(ValueError):
        build_system("lih", 1.0)


def test_errors_are_captured():
    res = run_point("h2", 0.0, "STO-3G")
    assert res.error is not None and res.noqe is None


def test_exact_noqe_between_noci_and_fci():
    res = run_point("h2", 1.5, "6-31G")
    assert res.error is None and res.broken_symmetry
    e_fci, e_noqe, e_noci = (r.energy_of("S0") for r in (res.fci, res.noqe, res.noci))
    assert e_fci <= e_noqe <= e_noci
    assert res.noqe.retained == 2
    assert res.noqe.energy_of("T1") >= res.fci.energy_of("T1") - 1e-10


def test_lowrank_converges_to_exact():
    prep = prepare(build_system("h2", 1.2), "6-31G")
    exact, _ = correlated_states(prep, SimulationMode())
    e_exact = analyse(prep, exact, 1e-4, None).energies
    errs = []
    for k in (1, 4, 16):
        states, rep = correlated_states(prep, SimulationMode("lowrank", k))
        assert rep.L_trunc == rep.L_eff
        errs.append(np.max(np.abs(analyse(prep, states, 1e-4, None).energies - e_exact)))
    assert errs[0] > errs[1] > errs[2]


def test_scaling_lowers_singlet():
    plain = run_point("h2", 1.5, "6-31G", with_noci=False)
    scaled = run_point("h2", 1.5, "6-31G", scheme=ScalingScheme.uniform(1.3), with_noci=False)
    assert scaled.noqe.energy_of("S0") < plain.noqe.energy_of("S0")


def test_fci_labels_and_eigenspace():
    prep = prepare(build_system("h4", 1.5), "STO-3G")
    fci = fci_states(prep)
    assert fci.labels[0] in ("S0", "T1")
    assert "Q1" in fci.labels
    # the Sz = 0 triplet of a square is spatially degenerate
    assert len(fci.eigenspace("T1")) >= 1
