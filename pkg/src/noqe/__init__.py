"""Non-orthogonal quantum eigensolver for small hydrogen clusters.

The package builds unrestricted Hartree-Fock references for every site
spin pattern, dresses each with a unitary cluster operator whose doubles
amplitudes come from second-order perturbation theory, and diagonalizes
the Hamiltonian in the resulting non-orthogonal basis. Quantum circuits
are simulated exactly on a number-conserving statevector, and closed-form
gate counts estimate what the same calculation would cost on hardware.
"""

from __future__ import annotations

from .chem import Molecule, h2, h4_square
from .correlation import ScalingScheme
from .pipeline import SimulationMode, run_point
from .resources import CostModel, resource_report

__all__ = [
    "CostModel",
    "Molecule",
    "ScalingScheme",
    "SimulationMode",
    "h2",
    "h4_square",
    "resource_report",
    "run_point",
]

__version__ = "0.1.0"
