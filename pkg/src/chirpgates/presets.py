"""Built-in device parameter sets and operating points.

These are the four benchmark devices used throughout the tests and example
configurations: a qubit-coupler-qubit pair for the standard CZ gate, a
variant of it for the always-on CZ gate, and two single driven transmons
for the phase (Z) and X / Hadamard gates.  Three-mode devices declare their
modes in (qubit a, coupler c, qubit b) order so occupation words such as
``ege`` read qubit-a / coupler / qubit-b.

Frequencies are given here in cyclic GHz / MHz and converted at
construction; everything downstream works in angular rad/ns.
"""
from __future__ import annotations

from .hilbert import CouplingSpec, DeviceModel, ModeSpec
from .units import ghz, mhz

#: Default truncations: qubits keep 4 levels; the driven mode keeps 5 since
#: the CZ mechanisms populate its f and h levels virtually.
QUBIT_LEVELS = 4
DRIVEN_LEVELS = 5


def _three_mode(freqs_ghz, anharms_mhz, g_mhz, coupler_levels=DRIVEN_LEVELS):
    fa, fb, fc = freqs_ghz
    aa, ab, ac = anharms_mhz
    gac, gbc, gab = g_mhz
    modes = (
        ModeSpec("a", ghz(fa), mhz(aa), QUBIT_LEVELS),
        ModeSpec("c", ghz(fc), mhz(ac), coupler_levels),
        ModeSpec("b", ghz(fb), mhz(ab), QUBIT_LEVELS),
    )
    couplings = (
        CouplingSpec(("a", "c"), mhz(gac)),
        CouplingSpec(("b", "c"), mhz(gbc)),
        CouplingSpec(("a", "b"), mhz(gab)),
    )
    return DeviceModel(modes=modes, couplings=couplings, drive_target="c")


def cz_device() -> DeviceModel:
    """Qubit-coupler-qubit device operated as a standard (pulsed-drive) CZ pair."""
    return _three_mode(
        freqs_ghz=(5.111, 5.612, 5.431),
        anharms_mhz=(-231.5, -249.9, -294.7),
        g_mhz=(75.2, 82.5, 7.2),
    )


def always_on_device() -> DeviceModel:
    """Qubit-coupler-qubit device with a higher coupler, for the always-on CZ."""
    return _three_mode(
        freqs_ghz=(5.111, 5.612, 5.950),
        anharms_mhz=(-231.5, -249.9, -298.7),
        g_mhz=(72.3, 79.2, 7.2),
    )


def z_gate_qubit(levels: int = DRIVEN_LEVELS) -> DeviceModel:
    """Single driven transmon used for adiabatic phase gates."""
    mode = ModeSpec("q", ghz(5.0), mhz(-150.0), levels)
    return DeviceModel(modes=(mode,), couplings=(), drive_target="q")


def x_gate_qubit(levels: int = DRIVEN_LEVELS) -> DeviceModel:
    """Single driven transmon used for nonadiabatic X / Hadamard gates."""
    mode = ModeSpec("q", ghz(5.0), mhz(-150.0), levels)
    return DeviceModel(modes=(mode,), couplings=(), drive_target="q")


# Operating points (drive amplitude Omega_1 and frequency window), angular rad/ns.
CZ_OMEGA1 = mhz(125.0)
CZ_OMEGA0 = ghz(5.745)

ALWAYS_ON_OMEGA1 = mhz(254.1)
ALWAYS_ON_OMEGA0 = ghz(5.85)

Z_OMEGA1 = mhz(190.0)
Z_OMEGA0 = ghz(4.0)

X_OMEGA1 = mhz(200.0)
X_OMEGA0 = ghz(4.5)
