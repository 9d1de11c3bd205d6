"""Run every configuration in scripts/configs through the command-line driver.

Usage: python3 scripts/run_studies.py [OUTPUT_DIR] [NAME ...]

Each ``<name>.conf`` is dispatched to the command implied by its name
(``*_scan``/``*_scaled`` to scan, ``*_truncation`` to truncate-study,
``resources`` to resources) and writes ``OUTPUT_DIR/<name>.csv``.
"""

from __future__ import annotations

import sys
from pathlib import Path

from noqe.cli import main

CONFIGS = Path(__file__).parent / "configs"


def command_for(name: str) -> str:
    if name.endswith("_truncation"):
        return "truncate-study"
    if name == "resources":
        return "resources"
    return "scan"


def run(out_dir: Path, names=None) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    status = 0
    for conf in sorted(CONFIGS.glob("*.conf")):
        if names and conf.stem not in names:
            continue
        target = out_dir / f"{conf.stem}.csv"
        code = main([command_for(conf.stem), "--config", str(conf), "--out", str(target)])
        print(f"{conf.stem}: exit {code} -> {target}")
        status = max(status, code)
    return status


if __name__ == "__main__":
    args = sys.argv[1:]
    out = Path(args[0]) if args else Path("results")
    sys.exit(run(out, set(args[1:])))
