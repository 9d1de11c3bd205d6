"""Command-line batch driver.

Commands
--------
``scan``
    One row per geometry with FCI, NOQE and NOCI energies of the S0, T1
    and Q1 states, the singlet-triplet gaps, spin diagnostics, infidelities
    and a Coulson-Fischer flag (1 when the first reference breaks spin
    symmetry).
``truncate-study``
    One row per truncation threshold with per-reference retained ranks,
    the ground-state energy, its shift from the untruncated result and the
    total cost reduction.
``resources``
    Closed-form gate counts over grids of spin-orbital and radical-site
    numbers.
``single-point``
    One row per eigenstate of every method at a single geometry.

Configuration files hold ``key = value`` lines whose keys are the long
flag names without the leading dashes (``grid = 0.5:3.5:0.05``). Lines
starting with ``#`` are ignored. Flags given on the command line override
the file.

All floats are written with 12 significant digits, rows are ordered by
input index and never by completion order, so identical configurations
produce byte-identical output. The exit status is 0 only when every row
succeeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import resources
from .chem import BOHR_IN_ANGSTROM
from .correlation import ScalingScheme
from .pipeline import (
    SimulationMode,
    analyse,
    build_system,
    correlated_states,
    prepare,
    run_point,
)

log = logging.getLogger("noqe")

FLOAT_FORMAT = "%.12g"
ZERO_SNAP = 1e-13
STATES = ("S0", "T1", "Q1")

SCAN_COLUMNS = (
    ("R",)
    + tuple(f"E_FCI_{s}" for s in STATES)
    + tuple(f"E_NOQE_{s}" for s in STATES)
    + tuple(f"E_NOCI_{s}" for s in STATES)
    + ("gap_FCI", "gap_NOQE", "gap_NOCI")
    + tuple(f"S2_NOQE_{s}" for s in STATES)
    + tuple(f"infidelity_{s}" for s in STATES)
    + ("retained", "CF", "error")
)

TRUNCATION_COLUMNS = ("R", "epsilon", "L_trunc", "L_eff", "E_S0", "dE_S0",
                      "cost_reduction", "error")

POINT_COLUMNS = ("R", "method", "index", "label", "E", "S2", "infidelity", "retained", "error")


# --- configuration -------------------------------------------------------


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (inclusive of ``stop``), a comma list, or a single value."""
    text = str(text).strip()
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError as exc:
            raise ValueError(f"grid {text!r} is not start:stop:step") from exc
        if step <= 0:
            raise ValueError("grid step must be positive")
        if stop < start:
            raise ValueError("grid stop lies below its start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(round(start + i * step, 10)) for i in range(n))
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ValueError(f"cannot parse grid {text!r}") from exc


def parse_int_grid(text: str) -> tuple[int, ...]:
    vals = parse_grid(text)
    if any(v != int(v) for v in vals):
        raise ValueError(f"grid {text!r} must contain integers")
    return tuple(int(v) for v in vals)


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by every command.

    ``grid`` holds distances in ``units``; the pipeline itself receives
    angstrom. ``eps_grid``, ``n_values`` and ``d_values`` are used only by
    the truncation study and the resource tables.
    """

    system: str = "h2"
    basis: str = "STO-3G"
    grid: tuple[float, ...] = (0.75,)
    units: str = "angstrom"
    scale: str = "1.0"
    mode: str = "exact"
    threshold: float = 1e-4
    m_s: float = 0.0
    out: str | None = None
    jobs: int = 1
    eps_grid: tuple[float, ...] = (0.0, 0.01, 0.018, 0.024, 0.028, 0.05)
    trotter: int = 1
    method: str = "takagi"
    n_values: tuple[int, ...] = tuple(range(4, 101, 4))
    d_values: tuple[int, ...] = (2, 4, 6)
    eps_syn: float = 1e-3
    no_noci: bool = False

    def __post_init__(self):
        if not self.grid:
            raise ValueError("distance grid is empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("distance grid must be strictly increasing")
        if any(r <= 0 for r in self.grid):
            raise ValueError("distances must be positive")
        if self.units not in ("angstrom", "bohr"):
            raise ValueError(f"unknown units {self.units!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.threshold <= 0:
            raise ValueError("overlap threshold must be positive")
        ScalingScheme.parse(self.scale)
        SimulationMode.parse(self.mode)

    @property
    def scheme(self) -> ScalingScheme:
        return ScalingScheme.parse(self.scale)

    @property
    def simulation(self) -> SimulationMode:
        return SimulationMode.parse(self.mode)

    def to_angstrom(self, r: float) -> float:
        return r * BOHR_IN_ANGSTROM if self.units == "bohr" else r


_CONVERTERS = {
    "grid": parse_grid,
    "eps_grid": parse_grid,
    "n_values": parse_int_grid,
    "d_values": parse_int_grid,
    "threshold": float,
    "m_s": float,
    "eps_syn": float,
    "jobs": int,
    "trotter": int,
    "no_noci": lambda v: str(v).strip().lower() in ("1", "true", "yes", "on"),
}


def read_config_file(path) -> dict[str, str]:
    """``key = value`` pairs; dashes in keys are folded to underscores."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{n}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def build_config(values: dict) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    kw = {}
    for key, val in values.items():
        conv = _CONVERTERS.get(key)
        kw[key] = conv(val) if conv is not None and isinstance(val, str) else val
    return RunConfig(**kw)


# --- output --------------------------------------------------------------


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        # round-off residue such as 1e-18 in <S^2> would otherwise print
        # with an arbitrary sign and mantissa
        v = float(v)
        return FLOAT_FORMAT % (0.0 if abs(v) < ZERO_SNAP else v)
    return str(v)


def write_csv(rows, columns, out=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(row.get(c)) for c in columns])
    text = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
    return text


def _map(fn, tasks, jobs: int):
    """Apply ``fn`` to every task; results keep task order regardless of ``jobs``."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


# --- scan ----------------------------------------------------------------


def _energy(result, label):
    if result is None or label not in result.labels:
        return None
    return result.energy_of(label)


def _gap(result):
    if result is None or "S0" not in result.labels or "T1" not in result.labels:
        return None
    return result.energy_of("T1") - result.energy_of("S0")


def _scan_task(args) -> dict:
    cfg, r = args
    res = run_point(cfg.system, cfg.to_angstrom(r), cfg.basis, scheme=cfg.scheme,
                    mode=cfg.simulation, threshold=cfg.threshold, m_s=cfg.m_s,
                    with_noci=not cfg.no_noci)
    row = {"R": r, "error": res.error}
    if res.error is not None:
        return row
    for s in STATES:
        row[f"E_FCI_{s}"] = _energy(res.fci, s)
        row[f"E_NOQE_{s}"] = _energy(res.noqe, s)
        row[f"E_NOCI_{s}"] = _energy(res.noci, s)
        if s in res.noqe.labels:
            row[f"S2_NOQE_{s}"] = float(res.noqe.s_squared[res.noqe.labels.index(s)])
        row[f"infidelity_{s}"] = res.noqe.infidelities.get(s)
    row["gap_FCI"] = _gap(res.fci)
    row["gap_NOQE"] = _gap(res.noqe)
    row["gap_NOCI"] = _gap(res.noci)
    row["retained"] = res.noqe.retained
    row["CF"] = bool(res.broken_symmetry)
    return row


def cmd_scan(cfg: RunConfig) -> list[dict]:
    return _map(_scan_task, [(cfg, r) for r in cfg.grid], cfg.jobs)


# --- truncation study ----------------------------------------------------


def _ranks(values) -> str:
    return ";".join(str(int(v)) for v in values)


def _truncation_task(args) -> list[dict]:
    cfg, r = args
    try:
        prep = prepare(build_system(cfg.system, cfg.to_angstrom(r), m_s=cfg.m_s),
                       cfg.basis, cfg.scheme)
        rows, e_full = [], None
        for eps in (0.0,) + tuple(e for e in cfg.eps_grid if e != 0.0):
            mode = SimulationMode("lowrank", cfg.trotter, eps, cfg.method)
            states, rep = correlated_states(prep, mode)
            e = analyse(prep, states, cfg.threshold, None).energies[0]
            if e_full is None:
                e_full = e
            if eps == 0.0 and 0.0 not in cfg.eps_grid:
                continue
            rows.append({"R": r, "epsilon": eps, "L_trunc": _ranks(rep.L_trunc),
                         "L_eff": _ranks(rep.L_eff), "E_S0": float(e),
                         "dE_S0": float(e - e_full),
                         "cost_reduction": rep.total_cost_reduction})
        return sorted(rows, key=lambda row: row["epsilon"])
    except Exception as exc:  # reported per row; the study continues
        log.error("geometry %.4f failed: %s", r, exc)
        return [{"R": r, "epsilon": e, "error": f"{type(exc).__name__}: {exc}"}
                for e in sorted(cfg.eps_grid)]


def cmd_truncate_study(cfg: RunConfig) -> list[dict]:
    per_point = _map(_truncation_task, [(cfg, r) for r in cfg.grid], cfg.jobs)
    return [row for rows in per_point for row in rows]


# --- resources -----------------------------------------------------------


def cmd_resources(cfg: RunConfig) -> list[dict]:
    return resources.resource_rows(cfg.n_values, cfg.d_values, k=cfg.trotter,
                                   eps_syn=cfg.eps_syn)


# --- single point --------------------------------------------------------


def cmd_single_point(cfg: RunConfig) -> list[dict]:
    r = cfg.grid[0]
    res = run_point(cfg.system, cfg.to_angstrom(r), cfg.basis, scheme=cfg.scheme,
                    mode=cfg.simulation, threshold=cfg.threshold, m_s=cfg.m_s,
                    with_noci=not cfg.no_noci)
    if res.error is not None:
        return [{"R": r, "error": res.error}]
    rows = []
    for name, out in (("FCI", res.fci), ("NOQE", res.noqe), ("NOCI", res.noci)):
        if out is None:
            continue
        retained = getattr(out, "retained", None)
        infid = getattr(out, "infidelities", {})
        for k, (e, s2, lab) in enumerate(zip(out.energies, out.s_squared, out.labels)):
            rows.append({"R": r, "method": name, "index": k, "label": lab, "E": float(e),
                         "S2": float(s2), "infidelity": infid.get(lab) if name != "FCI" else None,
                         "retained": retained})
    return rows


COMMANDS = {
    "scan": (cmd_scan, SCAN_COLUMNS),
    "truncate-study": (cmd_truncate_study, TRUNCATION_COLUMNS),
    "resources": (cmd_resources, resources.RESOURCE_COLUMNS),
    "single-point": (cmd_single_point, POINT_COLUMNS),
}


# --- argument parsing ----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="noqe",
        description="Non-orthogonal quantum eigensolver, simulated on a classical statevector.",
        epilog="A --config file holds 'key = value' lines using the long flag names "
               "(for example 'grid = 0.5:3.5:0.05' or 'scale = sos:1.3'). Command-line "
               "flags override it. NOQE_BASIS_PATH points at an alternative basis library.",
    )
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--system", help="h2, h4 (square) or a geometry file")
    p.add_argument("--basis", help="STO-3G, 6-31G or 6-311G")
    p.add_argument("--grid", help="distances: start:stop:step, a comma list or one value")
    p.add_argument("--units", choices=("angstrom", "bohr"))
    p.add_argument("--scale", help="amplitude scaling: 1.3, uniform:1.3, scs:0.33,1.2 or sos:1.3")
    p.add_argument("--mode", help="exact, noci or lowrank:k=2,eps=0.024[,method=svd]")
    p.add_argument("--threshold", help="overlap eigenvalue cutoff (default 1e-4)")
    p.add_argument("--m-s", dest="m_s", help="spin projection of the sector")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--jobs", help="worker processes over geometries")
    p.add_argument("--eps-grid", dest="eps_grid", help="truncation thresholds for truncate-study")
    p.add_argument("--trotter", help="Trotter steps for truncate-study and resources")
    p.add_argument("--method", choices=("takagi", "svd"), help="factorization for truncate-study")
    p.add_argument("--n-values", dest="n_values", help="spin-orbital grid for resources")
    p.add_argument("--d-values", dest="d_values", help="radical-site grid for resources")
    p.add_argument("--eps-syn", dest="eps_syn", help="rotation synthesis error for T counts")
    p.add_argument("--no-noci", dest="no_noci", action="store_const", const="1",
                   help="skip the uncorrelated NOCI comparison")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values = read_config_file(ns.config) if ns.config else {}
    skip = {"command", "config", "verbose"}
    values.update({k: v for k, v in vars(ns).items() if k not in skip and v is not None})
    return build_config(values)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
    except (ValueError, OSError) as exc:
        print(f"noqe: {exc}", file=sys.stderr)
        return 2
    fn, columns = COMMANDS[ns.command]
    rows = fn(cfg)
    write_csv(rows, columns, cfg.out)
    failed = sum(1 for row in rows if row.get("error"))
    if failed:
        print(f"noqe: {failed} of {len(rows)} rows failed", file=sys.stderr)
    return 0 if failed == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
