"""Pulse design toolkit for frequency- and amplitude-modulated microwave gates.

Submodules
----------
hilbert   : Kerr-oscillator device models, static Hamiltonians, labeling.
floquet   : extended-space Floquet solver, mode tracking, ZZ observables.
faquad    : constant-adiabaticity (FAQUAD) waveform synthesis.
dynamics  : pulse schedules, Schrodinger propagation, fidelity scoring.
gatecraft : adiabatic and nonadiabatic gate-design procedures.
awg       : carrier/baseband waveform export and bandwidth estimation.
cli       : configuration-driven command-line front end.
"""

__version__ = "0.1.0"

from . import units
from .hilbert import (
    ModeSpec,
    CouplingSpec,
    DeviceModel,
    kerr_hamiltonian,
    charge_operator,
    coupling_hamiltonian,
    assemble_static,
    bare_spectrum,
)

__all__ = [
    "units",
    "ModeSpec",
    "CouplingSpec",
    "DeviceModel",
    "kerr_hamiltonian",
    "charge_operator",
    "coupling_hamiltonian",
    "assemble_static",
    "bare_spectrum",
    "__version__",
]
