from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

DATA = Path(__file__).parent / "data"

settings.register_profile(
    "noqe", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("noqe")


@pytest.fixture(scope="session")
def pyscf_records():
    """Frozen third-party values written by scripts/make_fixtures.py."""
    return json.loads((DATA / "pyscf_reference.json").read_text())


def find_record(records, system, basis, distance):
    for rec in records:
        if rec["system"] == system and rec["basis"] == basis and abs(rec["distance"] - distance) < 1e-9:
            return rec
    raise KeyError((system, basis, distance))


_CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Print and remember one acceptance verdict for the terminal summary."""
    _CRITERIA[number] = (bool(ok), detail)
    print(f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
