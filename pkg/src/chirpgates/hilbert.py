"""Operators and static spectra for coupled Kerr-oscillator devices.

Each mode (fixed-frequency transmon qubit or coupler) is modeled as a Kerr
nonlinear oscillator truncated to a finite number of levels,

    H_j = omega_j a_j^dag a_j + (alpha_j / 2) a_j^dag a_j^dag a_j a_j,

and modes are joined pairwise by charge-charge couplings

    H_jk = -g_jk (a_j - a_j^dag)(a_k - a_k^dag).

This module assembles the static Hamiltonian H0 on the tensor-product space,
exposes the charge operator n = i(a^dag - a) used by the microwave drive, and
labels eigenstates of H0 by bare occupation tuples through maximum-overlap
assignment against the product basis.  The same assignment routine is reused
by the Floquet-mode tracker so that labeling is consistent everywhere.

Units: angular rad/ns throughout (see ``units``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import numpy.linalg as la

TWO_PI = 2.0 * np.pi

#: Letters used to render low occupation numbers, transmon style.
LEVEL_LETTERS = "gefh"


def level_letter(n: int) -> str:
    """Render a single occupation number: g, e, f, h, then digits."""
    if 0 <= n < len(LEVEL_LETTERS):
        return LEVEL_LETTERS[n]
    return str(n)


def occupation_word(occupation) -> str:
    """Render an occupation tuple as a compact word, e.g. (1, 0, 1) -> 'ege'."""
    return "".join(level_letter(int(n)) for n in occupation)


def parse_occupation_word(word: str) -> tuple:
    """Inverse of :func:`occupation_word` for letter-only words."""
    try:
        return tuple(LEVEL_LETTERS.index(ch) for ch in word)
    except ValueError:
        raise ValueError(f"cannot parse occupation word {word!r}") from None


@dataclass(frozen=True)
class ModeSpec:
    """One oscillator mode of the device.

    Parameters
    ----------
    label : str
        Mode name; single-letter convention ``a``/``b`` for qubits and ``c``
        for the coupler, or any tag for single-mode devices.
    frequency : float
        Mode frequency, angular rad/ns (> 0).
    anharmonicity : float
        Kerr anharmonicity, angular rad/ns (typically negative).
    levels : int
        Truncation dimension, >= 2.
    """

    label: str
    frequency: float
    anharmonicity: float
    levels: int

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError(f"mode {self.label!r}: levels must be >= 2, got {self.levels}")
        if not self.frequency > 0:
            raise ValueError(f"mode {self.label!r}: frequency must be positive")
        if not np.isfinite(self.anharmonicity):
            raise ValueError(f"mode {self.label!r}: anharmonicity must be finite")


@dataclass(frozen=True)
class CouplingSpec:
    """Charge-charge coupling between two declared modes with rate g (rad/ns)."""

    pair: tuple
    g: float

    def __post_init__(self):
        if len(self.pair) != 2 or self.pair[0] == self.pair[1]:
            raise ValueError(f"coupling pair must name two distinct modes, got {self.pair}")


@dataclass(frozen=True)
class DeviceModel:
    """A device: ordered modes, pairwise couplings, and the driven mode.

    The mode order fixes the tensor-product order and hence the reading
    order of occupation tuples.  Three-mode devices conventionally declare
    (qubit a, coupler c, qubit b) so that words like ``ege`` read as
    qubit-a/coupler/qubit-b occupation.
    """

    modes: tuple
    couplings: tuple
    drive_target: str

    def __post_init__(self):
        labels = [m.label for m in self.modes]
        if len(set(labels)) != len(labels):
            raise ValueError("mode labels must be unique")
        if self.drive_target not in labels:
            raise ValueError(f"drive_target {self.drive_target!r} is not a declared mode")
        for c in self.couplings:
            for end in c.pair:
                if end not in labels:
                    raise ValueError(f"coupling references undeclared mode {end!r}")
        pairs = [frozenset(c.pair) for c in self.couplings]
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate coupling pair")

    @property
    def dims(self) -> tuple:
        return tuple(m.levels for m in self.modes)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def mode_index(self, label: str) -> int:
        for i, m in enumerate(self.modes):
            if m.label == label:
                return i
        raise KeyError(label)

    def mode(self, label: str) -> ModeSpec:
        return self.modes[self.mode_index(label)]

    def embed(self, op: np.ndarray, label: str) -> np.ndarray:
        """Embed a single-mode operator into the full product space."""
        idx = self.mode_index(label)
        factors = [
            op if i == idx else np.eye(m.levels)
            for i, m in enumerate(self.modes)
        ]
        return reduce(np.kron, factors)

    def drive_charge(self) -> np.ndarray:
        """Charge operator of the driven mode, embedded in the full space."""
        return self.embed(charge_operator(self.mode(self.drive_target).levels), self.drive_target)


def destroy(levels: int) -> np.ndarray:
    """Truncated annihilation operator."""
    return np.diag(np.sqrt(np.arange(1, levels)), 1).astype(complex)


def kerr_hamiltonian(mode: ModeSpec) -> np.ndarray:
    """Diagonal Kerr Hamiltonian omega*n + (alpha/2)*n*(n-1)."""
    n = np.arange(mode.levels, dtype=float)
    return np.diag(mode.frequency * n + 0.5 * mode.anharmonicity * n * (n - 1)).astype(complex)


def charge_operator(levels: int) -> np.ndarray:
    """Charge operator n = i(a^dag - a); Hermitian with +/- i sqrt(n+1) off-diagonals."""
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    a = destroy(levels)
    return 1j * (a.conj().T - a)


def _momentum_quadrature(levels: int) -> np.ndarray:
    # a - a^dag: the coupling quadrature; real antisymmetric
    a = destroy(levels)
    return a - a.conj().T


def coupling_hamiltonian(j: ModeSpec, k: ModeSpec, g: float, device: DeviceModel) -> np.ndarray:
    """Full-space coupling term -g (a_j - a_j^dag)(a_k - a_k^dag)."""
    opj = device.embed(_momentum_quadrature(j.levels), j.label)
    opk = device.embed(_momentum_quadrature(k.levels), k.label)
    return -g * (opj @ opk)


def assemble_static(device: DeviceModel) -> np.ndarray:
    """Static Hamiltonian H0 = sum_j H_j + sum_(jk) H_jk on the product space."""
    H = np.zeros((device.dim, device.dim), dtype=complex)
    for m in device.modes:
        H += device.embed(kerr_hamiltonian(m), m.label)
    for c in device.couplings:
        H += coupling_hamiltonian(device.mode(c.pair[0]), device.mode(c.pair[1]), c.g, device)
    return H


def max_overlap_assignment(overlap2: np.ndarray, ambiguity: float = 1e-6):
    """Greedy bijective assignment of rows (references) to columns (candidates).

    ``overlap2[r, k]`` holds squared overlaps.  Entries are consumed in
    descending order; each row and column is used once.  Deterministic: ties
    broken by flat index order (numpy argsort is stable with kind='stable').

    Returns
    -------
    assignment : dict row -> column
    warnings : list of str
        One entry per assignment whose winning overlap beats the best
        remaining alternative in its row by less than ``ambiguity``.
    """
    n_rows, n_cols = overlap2.shape
    if n_rows > n_cols:
        raise ValueError("more references than candidates")
    order = np.argsort(-overlap2, axis=None, kind="stable")
    row_used = np.zeros(n_rows, dtype=bool)
    col_used = np.zeros(n_cols, dtype=bool)
    assignment = {}
    n_assigned = 0
    for flat in order:
        r, k = divmod(int(flat), n_cols)
        if row_used[r] or col_used[k]:
            continue
        assignment[r] = k
        row_used[r] = True
        col_used[k] = True
        n_assigned += 1
        if n_assigned == n_rows:
            break
    warnings = []
    for r, k in assignment.items():
        rivals = np.delete(overlap2[r], k)
        if rivals.size and overlap2[r, k] - rivals.max() < ambiguity:
            warnings.append(
                f"ambiguous assignment for reference {r}: margin "
                f"{overlap2[r, k] - rivals.max():.3e} below {ambiguity:.0e}"
            )
    return assignment, warnings


@dataclass
class BareSpectrum:
    """Labeled eigendecomposition of H0.

    ``energies``/``states`` map occupation tuples to eigenvalues (rad/ns) and
    eigenvectors (full-space, unit norm).  ``warnings`` records labeling
    ambiguities.
    """

    energies: dict
    states: dict
    warnings: list = field(default_factory=list)

    def energy(self, occupation) -> float:
        return self.energies[tuple(occupation)]

    def state(self, occupation) -> np.ndarray:
        return self.states[tuple(occupation)]


def bare_spectrum(H0: np.ndarray, device: DeviceModel, ambiguity: float = 1e-6) -> BareSpectrum:
    """Diagonalize H0 and label every eigenstate by an occupation tuple.

    Labels are assigned bijectively by maximum squared overlap with the
    product basis.  At realistic coupling strengths the dressed states are
    close to product states and the assignment is unambiguous; degeneracy or
    strong mixing produces warning entries rather than errors.
    """
    if H0.shape != (device.dim, device.dim):
        raise ValueError("H0 dimension does not match the device")
    evals, evecs = la.eigh(H0)
    overlap2 = np.abs(evecs) ** 2  # rows: product states, cols: eigenstates
    assignment, warnings = max_overlap_assignment(overlap2, ambiguity)
    energies = {}
    states = {}
    for row, col in assignment.items():
        occ = np.unravel_index(row, device.dims)
        occ = tuple(int(x) for x in occ)
        energies[occ] = float(evals[col])
        states[occ] = evecs[:, col]
    return BareSpectrum(energies=energies, states=states, warnings=warnings)
