"""Extended-Hilbert-space Floquet analysis at frozen drive parameters.

For a drive H_d(t) = Omega cos(theta) n with instantaneous frequency
omega_inst, the Floquet Hamiltonian in the extended space K = H (x) l2(Z) is

    H_F = H0 + Omega cos(vartheta) n + omega_inst m,

which in the photon-index (m) basis is block tridiagonal: diagonal blocks
H0 + m*omega_inst, off-diagonal blocks (Omega/2) n between adjacent m.  Its
eigenpairs are the quasienergies eps_{m,alpha} and Floquet modes; at
Omega = 0 they reduce to eps = E_alpha + m*omega_inst with product modes
|m> (x) |alpha>.

The module tracks labeled modes across parameter sweeps by maximum-overlap
continuation, derives the ZZ interaction from the four computational
quasienergies, folds quasienergies into a Brillouin zone, and provides an
independent monodromy oracle based on the one-period propagator in the
original space.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
import numpy.linalg as la
from scipy.integrate import solve_ivp

from .hilbert import BareSpectrum, DeviceModel, assemble_static, bare_spectrum, max_overlap_assignment, occupation_word
from .units import TWO_PI, to_ghz

#: Default photon-index truncations (always convergence-checked for new setups).
DEFAULT_M_MAX_SINGLE = 8
DEFAULT_M_MAX_MULTI = 4

#: Default per-step continuity threshold for tracked quasienergies (rad/ns).
CONTINUITY_THRESHOLD = TWO_PI * 0.050

#: Amplitude continuation step used when seeding labels at finite drive (rad/ns).
SEED_AMPLITUDE_STEP = TWO_PI * 0.005


class FloquetLabel(NamedTuple):
    """Photon index m and bare occupation tuple alpha labeling a Floquet mode."""

    m: int
    alpha: tuple

    def __str__(self):
        return f"|{self.m},{occupation_word(self.alpha)}>"


@dataclass(frozen=True)
class FloquetProblem:
    """Frozen-drive Floquet eigenproblem.

    Fields are the static Hamiltonian H0, the embedded charge operator of the
    driven mode, the drive amplitude Omega >= 0 and instantaneous frequency
    omega_inst > 0 (both rad/ns), and the photon truncation m_max.  ``bare``
    carries the labeled spectrum of H0 for seeding labels at Omega = 0.
    """

    H0: np.ndarray
    n_hat: np.ndarray
    omega_amp: float
    omega_inst: float
    m_max: int
    bare: Optional[BareSpectrum] = None

    def __post_init__(self):
        if self.omega_amp < 0:
            raise ValueError("drive amplitude must be >= 0")
        if not self.omega_inst > 0:
            raise ValueError("omega_inst must be positive")
        if self.m_max < 1:
            raise ValueError("m_max must be >= 1")
        if self.H0.shape != self.n_hat.shape or self.H0.shape[0] != self.H0.shape[1]:
            raise ValueError("H0 and n_hat must be square and matching")

    @classmethod
    def from_device(cls, device: DeviceModel, omega_amp: float, omega_inst: float,
                    m_max: Optional[int] = None) -> "FloquetProblem":
        if m_max is None:
            m_max = DEFAULT_M_MAX_SINGLE if len(device.modes) == 1 else DEFAULT_M_MAX_MULTI
        H0 = assemble_static(device)
        return cls(
            H0=H0,
            n_hat=device.drive_charge(),
            omega_amp=omega_amp,
            omega_inst=omega_inst,
            m_max=m_max,
            bare=bare_spectrum(H0, device),
        )

    def at(self, omega_amp: Optional[float] = None, omega_inst: Optional[float] = None) -> "FloquetProblem":
        """Copy of this problem at different frozen drive parameters."""
        out = self
        if omega_amp is not None:
            out = replace(out, omega_amp=float(omega_amp))
        if omega_inst is not None:
            out = replace(out, omega_inst=float(omega_inst))
        return out

    @property
    def dim(self) -> int:
        return self.H0.shape[0]

    @property
    def extended_dim(self) -> int:
        return (2 * self.m_max + 1) * self.dim

    def is_edge(self, label: FloquetLabel) -> bool:
        """Whether a label sits in the truncation-distorted edge band |m| > m_max - 2."""
        return abs(label.m) > self.m_max - 2


def build_floquet(problem: FloquetProblem) -> np.ndarray:
    """Assemble the block-tridiagonal extended-space operator."""
    n_blocks = 2 * problem.m_max + 1
    m_values = np.arange(-problem.m_max, problem.m_max + 1, dtype=float)
    adjacency = np.diag(np.ones(n_blocks - 1), 1) + np.diag(np.ones(n_blocks - 1), -1)
    K = np.kron(np.eye(n_blocks), problem.H0)
    K += problem.omega_inst * np.kron(np.diag(m_values), np.eye(problem.dim))
    if problem.omega_amp != 0.0:
        K += 0.5 * problem.omega_amp * np.kron(adjacency, problem.n_hat)
    return K


def zero_amplitude_modes(problem: FloquetProblem, labels: Sequence[FloquetLabel]) -> dict:
    """Exact Floquet modes |m> (x) |alpha> of the undriven problem."""
    if problem.bare is None:
        raise ValueError("problem carries no labeled bare spectrum")
    n_blocks = 2 * problem.m_max + 1
    modes = {}
    for lab in labels:
        if abs(lab.m) > problem.m_max:
            raise ValueError(f"label {lab} outside m_max={problem.m_max}")
        block = np.zeros(n_blocks)
        block[lab.m + problem.m_max] = 1.0
        modes[lab] = np.kron(block, problem.bare.state(lab.alpha)).astype(complex)
    return modes


def mode_lab_state(vector: np.ndarray, dim: int, theta: float,
                   norm_tol: float = 1e-6) -> np.ndarray:
    """Original-space Floquet mode at drive phase theta.

    The extended eigenvector stacks Fourier blocks c_m for m = -m_max..m_max;
    the periodic part of the mode in the lab frame is u(theta) = sum_m
    exp(i m theta) c_m.  For a converged mode u has unit norm at every theta;
    a large deviation signals truncation loss and raises.
    """
    vec = np.asarray(vector, dtype=complex)
    if vec.ndim != 1 or vec.size % dim != 0:
        raise ValueError("vector length is not a multiple of the space dimension")
    n_blocks = vec.size // dim
    if n_blocks % 2 != 1:
        raise ValueError("expected an odd number of photon blocks")
    m_max = (n_blocks - 1) // 2
    blocks = vec.reshape(n_blocks, dim)
    phases = np.exp(1j * np.arange(-m_max, m_max + 1) * theta)
    state = phases @ blocks
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > norm_tol:
        raise ValueError(
            f"lab-frame mode norm {norm:.6f} deviates from 1; "
            "the photon truncation is too aggressive for this mode"
        )
    return state / norm


@dataclass
class FloquetSolution:
    """Labeled eigenpairs of one frozen-drive solve."""

    problem: FloquetProblem
    quasienergies: dict
    modes: dict
    warnings: list = field(default_factory=list)

    def quasienergy(self, label) -> float:
        return self.quasienergies[FloquetLabel(*label)]

    def mode(self, label) -> np.ndarray:
        return self.modes[FloquetLabel(*label)]

    @property
    def labels(self):
        return list(self.quasienergies)


def solve_floquet(problem: FloquetProblem, seeds: Optional[dict] = None,
                  labels: Optional[Sequence[FloquetLabel]] = None,
                  ambiguity: float = 1e-6) -> FloquetSolution:
    """Diagonalize the extended operator and assign labels.

    With ``seeds`` (label -> prior mode vector) the labels continue by
    maximum overlap against the seed vectors; otherwise they are assigned
    against the Omega = 0 product modes for the requested ``labels`` (all
    |m| <= m_max with every bare alpha when omitted).  Near-ties below
    ``ambiguity`` in squared overlap are recorded as warnings.
    """
    if seeds is None:
        if labels is None:
            if problem.bare is None:
                raise ValueError("need seeds, labels, or a labeled bare spectrum")
            labels = [
                FloquetLabel(m, alpha)
                for m in range(-problem.m_max, problem.m_max + 1)
                for alpha in sorted(problem.bare.energies)
            ]
        seeds = zero_amplitude_modes(problem, list(labels))
    keys = list(seeds)
    evals, evecs = la.eigh(build_floquet(problem))
    seed_mat = np.column_stack([seeds[k] for k in keys])
    overlap2 = np.abs(seed_mat.conj().T @ evecs) ** 2
    assignment, warnings = max_overlap_assignment(overlap2, ambiguity)
    quasi = {}
    modes = {}
    for row, col in assignment.items():
        lab = FloquetLabel(*keys[row])
        quasi[lab] = float(evals[col])
        modes[lab] = evecs[:, col]
    return FloquetSolution(problem=problem, quasienergies=quasi, modes=modes, warnings=warnings)


def seed_modes(problem: FloquetProblem, labels: Sequence[FloquetLabel],
               amplitude_step: float = SEED_AMPLITUDE_STEP) -> dict:
    """Label seeds at finite drive by adiabatic continuation of the amplitude.

    Ramps Omega from zero to ``problem.omega_amp`` in steps of at most
    ``amplitude_step``, tracking the requested labels, and returns the final
    mode vectors.  This is the adiabatic mapping between bare states and
    Floquet modes used to define labels where the drive is already on.
    """
    labels = [FloquetLabel(*l) for l in labels]
    if problem.omega_amp == 0.0:
        return zero_amplitude_modes(problem, labels)
    n_steps = max(2, int(np.ceil(problem.omega_amp / amplitude_step)))
    seeds = zero_amplitude_modes(problem, labels)
    for amp in np.linspace(0.0, problem.omega_amp, n_steps + 1)[1:]:
        sol = solve_floquet(problem.at(omega_amp=amp), seeds=seeds)
        seeds = sol.modes
    return seeds


@dataclass
class QuasienergyTable:
    """Tracked quasienergies along a one-parameter sweep.

    ``entries[i]`` maps each tracked label to ``(quasienergy, mode_vector)``
    at ``values[i]`` of the swept parameter (``sweep_parameter`` is either
    ``omega_amp`` or ``omega_inst``; the frozen value of the other axis is in
    ``fixed``).  Tracking warnings accumulate in ``warnings``.
    """

    sweep_parameter: str
    values: np.ndarray
    tracked: list
    entries: list
    fixed: dict
    m_max: int
    warnings: list = field(default_factory=list)

    def quasienergies(self, label) -> np.ndarray:
        lab = FloquetLabel(*label)
        return np.array([entry[lab][0] for entry in self.entries])

    def mode(self, label, index: int) -> np.ndarray:
        return self.entries[index][FloquetLabel(*label)][1]

    def gap(self, label_a, label_b) -> np.ndarray:
        return np.abs(self.quasienergies(label_a) - self.quasienergies(label_b))

    def to_csv(self, path) -> None:
        """Long-format CSV: one row per (sample, label), quasienergy in GHz."""
        name = f"{self.sweep_parameter}_ghz"
        with open(path, "w") as fh:
            fh.write(f"{name},m,alpha,quasienergy_ghz\n")
            for value, entry in zip(self.values, self.entries):
                for lab in self.tracked:
                    eps = entry[lab][0]
                    fh.write(
                        f"{to_ghz(value):.17g},{lab.m},{occupation_word(lab.alpha)},{to_ghz(eps):.17g}\n"
                    )

    def to_json_dict(self, include_overlaps: bool = False) -> dict:
        out = {
            "sweep_parameter": self.sweep_parameter,
            "values_ghz": [to_ghz(v) for v in self.values],
            "fixed_ghz": {k: to_ghz(v) for k, v in self.fixed.items()},
            "m_max": self.m_max,
            "labels": [{"m": lab.m, "alpha": list(lab.alpha)} for lab in self.tracked],
            "quasienergies_ghz": [
                [to_ghz(entry[lab][0]) for lab in self.tracked] for entry in self.entries
            ],
            "warnings": list(self.warnings),
        }
        if include_overlaps:
            overlaps = []
            for i, entry in enumerate(self.entries):
                if i == 0:
                    overlaps.append([1.0] * len(self.tracked))
                    continue
                prev = self.entries[i - 1]
                overlaps.append([
                    float(np.abs(np.vdot(prev[lab][1], entry[lab][1])) ** 2)
                    for lab in self.tracked
                ])
            out["tracking_overlaps"] = overlaps
        return out


class ContinuityError(RuntimeError):
    """A tracked quasienergy jumped by more than the continuity threshold."""


def sweep(problem: FloquetProblem, axis: str, values, tracked: Sequence[FloquetLabel],
          seeds: Optional[dict] = None,
          continuity_threshold: float = CONTINUITY_THRESHOLD,
          ambiguity: float = 1e-6) -> QuasienergyTable:
    """Track labeled modes along a monotone grid of one drive parameter.

    The first sample is labeled from ``seeds`` when given, from the exact
    product modes when it sits at Omega = 0, and otherwise by adiabatic
    amplitude continuation (:func:`seed_modes`).  Subsequent samples continue
    labels by maximum overlap with the previous sample's vectors.  A
    per-label quasienergy jump above ``continuity_threshold`` (after removing
    the explicit m * d(omega_inst) drift on frequency sweeps) raises
    :class:`ContinuityError`.
    """
    if axis not in ("omega_amp", "omega_inst"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 1:
        raise ValueError("sweep grid must be a nonempty 1-D array")
    diffs = np.diff(values)
    if values.size > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("sweep grid must be strictly monotone")
    tracked = [FloquetLabel(*l) for l in tracked]

    first = problem.at(**{axis: values[0]})
    if seeds is None:
        if first.omega_amp == 0.0:
            seeds = zero_amplitude_modes(first, tracked)
        else:
            seeds = seed_modes(first, tracked)

    entries = []
    warnings = []
    fixed_axis = "omega_inst" if axis == "omega_amp" else "omega_amp"
    prev_eps = None
    for i, value in enumerate(values):
        point = problem.at(**{axis: value})
        sol = solve_floquet(point, seeds=seeds)
        for w in sol.warnings:
            warnings.append(f"sample {i} ({axis}={to_ghz(value):.6f} GHz): {w}")
        entry = {lab: (sol.quasienergies[lab], sol.modes[lab]) for lab in tracked}
        if prev_eps is not None:
            step = values[i] - values[i - 1]
            for lab in tracked:
                drift = lab.m * step if axis == "omega_inst" else 0.0
                jump = abs(entry[lab][0] - prev_eps[lab] - drift)
                if jump > continuity_threshold:
                    raise ContinuityError(
                        f"label {lab} jumped {to_ghz(jump) * 1e3:.2f} MHz between samples "
                        f"{i - 1} and {i} ({axis}={to_ghz(value):.6f} GHz), "
                        f"threshold {to_ghz(continuity_threshold) * 1e3:.2f} MHz"
                    )
        seeds = sol.modes
        prev_eps = {lab: entry[lab][0] for lab in tracked}
        entries.append(entry)

    table = QuasienergyTable(
        sweep_parameter=axis,
        values=values,
        tracked=tracked,
        entries=entries,
        fixed={fixed_axis: getattr(problem, fixed_axis)},
        m_max=problem.m_max,
        warnings=warnings,
    )
    _validate_table(table)
    return table


def _validate_table(table: QuasienergyTable) -> None:
    for i, entry in enumerate(table.entries):
        for lab in table.tracked:
            norm = la.norm(entry[lab][1])
            if abs(norm - 1.0) > 1e-10:
                raise RuntimeError(f"mode {lab} at sample {i} has norm {norm!r}")


def computational_occupations(n_modes: int, qubit_positions=(0, 2)) -> dict:
    """Occupation tuples of the two-qubit computational states.

    Returns a dict with keys '00', '01', '10', '11'; position convention is
    (qubit a, coupler, qubit b) unless overridden.
    """
    def occ(na, nb):
        out = [0] * n_modes
        out[qubit_positions[0]] = na
        out[qubit_positions[1]] = nb
        return tuple(out)

    return {"00": occ(0, 0), "01": occ(0, 1), "10": occ(1, 0), "11": occ(1, 1)}


@dataclass
class ZZResult:
    """ZZ interaction at one sweep sample: xi in cyclic MHz plus its constituents."""

    xi_zz_mhz: float
    constituents: dict


def zz_interaction(table: QuasienergyTable, m: int = 0, qubit_positions=(0, 2)) -> list:
    """Per-sample ZZ interaction xi = eps_ege + eps_ggg - eps_gge - eps_egg.

    All four quasienergies are taken from the same table sample at photon
    index ``m``; the result is reported in cyclic MHz.
    """
    if abs(m) > table.m_max - 2:
        raise ValueError(f"m={m} lies in the truncation edge band for m_max={table.m_max}")
    n_modes = len(table.tracked[0].alpha)
    comp = computational_occupations(n_modes, qubit_positions)
    needed = {key: FloquetLabel(m, occ) for key, occ in comp.items()}
    for lab in needed.values():
        if lab not in table.tracked:
            raise ValueError(f"table does not track required label {lab}")
    results = []
    for entry in table.entries:
        eps = {key: entry[lab][0] for key, lab in needed.items()}
        xi = eps["11"] + eps["00"] - eps["01"] - eps["10"]
        results.append(ZZResult(xi_zz_mhz=xi / TWO_PI * 1e3, constituents=eps))
    return results


def zz_to_csv(table: QuasienergyTable, path, m: int = 0, qubit_positions=(0, 2)) -> None:
    """CSV of the ZZ interaction along a sweep (sweep value in GHz, xi in MHz)."""
    results = zz_interaction(table, m=m, qubit_positions=qubit_positions)
    name = f"{table.sweep_parameter}_ghz"
    with open(path, "w") as fh:
        fh.write(f"{name},xi_zz_mhz\n")
        for value, res in zip(table.values, results):
            fh.write(f"{to_ghz(value):.17g},{res.xi_zz_mhz:.17g}\n")


def brillouin_fold(epsilon, omega: float, zone_base: Optional[float] = None):
    """Fold quasienergies into [zone_base, zone_base + omega).

    The zone base defaults to -omega/2 (zone centered on zero).
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    if zone_base is None:
        zone_base = -0.5 * omega
    eps = np.asarray(epsilon, dtype=float)
    folded = zone_base + np.mod(eps - zone_base, omega)
    # guard against mod returning omega on negative-zero edge cases
    folded = np.where(folded >= zone_base + omega, folded - omega, folded)
    if np.ndim(epsilon) == 0:
        return float(folded)
    return folded


def circular_distance(a, b, omega: float):
    """Distance between quasienergies on the circle of circumference omega."""
    d = np.mod(np.asarray(a) - np.asarray(b), omega)
    return np.minimum(d, omega - d)


def monodromy_quasienergies(H0: np.ndarray, n_hat: np.ndarray, omega_amp: float,
                            omega_inst: float, rtol: float = 1e-12, atol: float = 1e-14,
                            unitarity_tol: float = 1e-8) -> np.ndarray:
    """Quasienergies from the one-period propagator in the original space.

    Propagates the identity over one drive period T = 2*pi/omega_inst under
    H(t) = H0 + Omega cos(omega_inst t) n, eigendecomposes the monodromy
    operator U(T), and returns eps = -arg(eigenvalue)/T folded to
    [0, omega_inst), sorted ascending.  This is an independent oracle for the
    extended-space diagonalization: it never constructs the extended space.
    """
    dim = H0.shape[0]
    period = TWO_PI / omega_inst

    def rhs(t, y):
        psi = y.reshape(dim, dim)
        H = H0 + omega_amp * np.cos(omega_inst * t) * n_hat
        return (-1j * (H @ psi)).ravel()

    y0 = np.eye(dim, dtype=complex).ravel()
    sol = solve_ivp(rhs, (0.0, period), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=False)
    if not sol.success:
        raise RuntimeError(f"monodromy propagation failed: {sol.message}")
    U = sol.y[:, -1].reshape(dim, dim)
    deviation = la.norm(U.conj().T @ U - np.eye(dim), ord=2)
    if deviation > unitarity_tol:
        raise RuntimeError(f"monodromy propagator unitarity off by {deviation:.2e}")
    phases = np.angle(la.eigvals(U))
    eps = np.mod(-phases / period, omega_inst)
    return np.sort(eps)


@dataclass
class ConvergenceReport:
    """Quasienergy drift of tracked labels between successive m_max candidates."""

    m_max_values: list
    drifts: list          # drifts[i]: max |delta eps| between candidate i and i+1 (rad/ns)
    per_label: list       # same, resolved by label
    threshold: float
    smallest_passing: Optional[int]

    @property
    def passed(self) -> bool:
        return bool(self.drifts) and self.drifts[-1] < self.threshold


def convergence_check(problem: FloquetProblem, m_max_candidates: Sequence[int],
                      tracked: Sequence[FloquetLabel],
                      threshold: float = TWO_PI * 1e-6) -> ConvergenceReport:
    """Compare tracked quasienergies across photon-truncation candidates.

    Each candidate is solved independently (labels seeded by amplitude
    continuation), and the report lists the maximum drift between successive
    candidates.  The default pass threshold is 2*pi x 1 kHz.
    """
    candidates = sorted(set(int(m) for m in m_max_candidates))
    if len(candidates) < 2:
        raise ValueError("need at least two m_max candidates")
    tracked = [FloquetLabel(*l) for l in tracked]
    solutions = []
    for m_max in candidates:
        prob = replace(problem, m_max=m_max)
        sol = solve_floquet(prob, seeds=seed_modes(prob, tracked))
        solutions.append({lab: sol.quasienergies[lab] for lab in tracked})
    drifts = []
    per_label = []
    for lo, hi in zip(solutions[:-1], solutions[1:]):
        by_label = {lab: abs(hi[lab] - lo[lab]) for lab in tracked}
        per_label.append(by_label)
        drifts.append(max(by_label.values()))
    smallest = None
    for i, drift in enumerate(drifts):
        if drift < threshold:
            smallest = candidates[i]
            break
    return ConvergenceReport(
        m_max_values=candidates,
        drifts=drifts,
        per_label=per_label,
        threshold=threshold,
        smallest_passing=smallest,
    )
