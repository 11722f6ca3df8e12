"""Unit helpers.

All internal frequencies are angular, in rad/ns.  Configuration files and
reports use cyclic units (GHz, MHz); conversion happens only at those
boundaries.  1 GHz cyclic = 2*pi rad/ns angular.
"""
from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def ghz(value):
    """Cyclic GHz -> angular rad/ns."""
    return TWO_PI * np.asarray(value, dtype=float) if np.ndim(value) else TWO_PI * float(value)


def mhz(value):
    """Cyclic MHz -> angular rad/ns."""
    return ghz(value) * 1e-3


def to_ghz(omega):
    """Angular rad/ns -> cyclic GHz."""
    return np.asarray(omega) / TWO_PI if np.ndim(omega) else float(omega) / TWO_PI


def to_mhz(omega):
    """Angular rad/ns -> cyclic MHz."""
    return to_ghz(omega) * 1e3
