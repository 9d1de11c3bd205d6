from __future__ import annotations

import csv
import io
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from noqe import cli

DATA = Path(__file__).parent / "data"


@given(st.floats(0.1, 3.0), st.integers(0, 40), st.sampled_from([0.01, 0.05, 0.1, 0.25]))
def test_grid_is_inclusive_and_increasing(start, n, step):
    stop = start + n * step
    grid = cli.parse_grid(f"{start!r}:{stop!r}:{step!r}")
    assert len(grid) == n + 1
    assert grid[0] == pytest.approx(start) and grid[-1] == pytest.approx(stop)
    assert all(b > a for a, b in zip(grid, grid[1:]))


def test_grid_forms():
    assert cli.parse_grid("0.75") == (0.75,)
    assert cli.parse_grid("0.7, 0.8") == (0.7, 0.8)
    for bad in ("1:0:0.1", "0:1:0", "0:1", "x"):
        with pytest.raises(ValueError):
            cli.parse_grid(bad)


def test_config_validation():
    with pytest.raises(ValueError):
        cli.RunConfig(grid=())
    with pytest.raises(ValueError):
        cli.RunConfig(grid=(1.0, 0.5))
    with pytest.raises(ValueError):
        cli.RunConfig(jobs=0)
    with pytest.raises(ValueError):
        cli.RunConfig(scale="magic")
    with pytest.raises(ValueError):
        cli.build_config({"colour": "blue"})
    assert cli.RunConfig(units="bohr").to_angstrom(1.0) == pytest.approx(0.529177210903)


def test_config_file_and_overrides(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# sweep\nsystem = h2\nbasis = 6-31G\ngrid = 0.7:0.9:0.1\nscale = scs:0.33,1.2\neps-grid = 0,0.02\n")
    ns = cli.build_parser().parse_args(["scan", "--config", str(conf), "--basis", "STO-3G"])
    cfg = cli.config_from_args(ns)
    assert cfg.basis == "STO-3G"
    assert cfg.grid == (0.7, 0.8, 0.9)
    assert cfg.scheme.kind == "scs"
    assert cfg.eps_grid == (0.0, 0.02)
    bad = tmp_path / "bad.conf"
    bad.write_text("grid 0.7\n")
    with pytest.raises(ValueError):
        cli.read_config_file(bad)


def test_format_value():
    assert cli.format_value(None) == ""
    assert cli.format_value(True) == "1"
    assert cli.format_value(3) == "3"
    assert cli.format_value(1 / 3) == "0.333333333333"
    assert cli.format_value(-3e-17) == "0"


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def _assert_close_csv(text, golden_path):
    got, want = _rows(text), _rows(golden_path.read_text())
    assert len(got) == len(want)
    for g, w in zip(got, want):
        assert g.keys() == w.keys()
        for key in w:
            if w[key] == "" or not w[key].lstrip("-").replace(".", "").replace("e", "").replace("-", "").isdigit():
                assert g[key] == w[key], key
            else:
                assert float(g[key]) == pytest.approx(float(w[key]), abs=1e-8), key


def test_scan_golden(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    rc = cli.main(["scan", "--system", "h2", "--basis", "STO-3G", "--grid", "0.7:1.5:0.4", "--out", str(out)])
    assert rc == 0
    _assert_close_csv(out.read_text(), DATA / "golden_scan_h2_sto3g.csv")


def test_truncation_golden(tmp_path):
    out = tmp_path / "trunc.csv"
    rc = cli.main(["truncate-study", "--system", "h2", "--basis", "6-311G", "--grid", "0.75",
                   "--scale", "1.3", "--eps-grid", "0,0.024", "--out", str(out)])
    assert rc == 0
    _assert_close_csv(out.read_text(), DATA / "golden_truncation_h2.csv")


def test_parallel_output_is_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["scan", "--system", "h2", "--basis", "STO-3G", "--grid", "0.6,1.0,1.4,2.0"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b), "--jobs", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_failed_rows_set_exit_code(tmp_path, capsys):
    geom = tmp_path / "bad.xyz"
    geom.write_text("angstrom\nH 0 0 0\n")  # one electron cannot carry m_s = 0
    rc = cli.main(["scan", "--system", str(geom), "--grid", "1.0"])
    captured = capsys.readouterr()
    assert rc == 1
    assert "GeometryError" in captured.out


def test_bad_arguments_exit_2(capsys):
    assert cli.main(["scan", "--grid", "1:0:1"]) == 2


def test_resources_and_single_point(capsys):
    assert cli.main(["resources", "--n-values", "8", "--d-values", "2"]) == 0
    text = capsys.readouterr().out
    rows = _rows(text)
    assert [r["policy"] for r in rows] == ["full", "trunc", "ucj"]
    assert cli.main(["single-point", "--system", "h2", "--grid", "1.2", "--no-noci"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert {r["method"] for r in rows} == {"FCI", "NOQE"}
    assert rows[0]["label"] == "S0"
