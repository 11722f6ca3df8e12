"""Time-domain pulse assembly, propagation, and gate scoring.

A gate drive is built from up to five stages laid end to end:

    1. amplitude ramp 0 -> Omega1 at fixed instantaneous frequency omega0
    2. frequency chirp omega0 -> omega1 at fixed amplitude Omega1
    3. hold at omega1
    4. mirror of stage 2
    5. mirror of stage 1

Stages may be omitted (zero duration): an always-on drive has no amplitude
ramps, a pure ramp experiment has no chirp or hold.  The assembled waveform
lives on a uniform time grid; the drive phase theta(t) is the cumulative
integral of the instantaneous frequency, so the lab-frame Hamiltonian is

    H(t) = H0 + Omega(t) * cos(theta(t)) * n_hat.

Propagation is done directly in the lab frame.  Scoring projects the final
states onto a computational basis, strips the phase freedoms that the gate
family leaves free (virtual Z for CZ, the fitted phases of the X and Hadamard
forms), and evaluates the average gate fidelity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.interpolate import PchipInterpolator

__all__ = [
    "DEFAULT_DT",
    "SLOW_VARIATION_LIMIT",
    "GATE_KINDS",
    "PHASE_TARGETS",
    "Waveform",
    "StageSchedule",
    "PulseSchedule",
    "GateReport",
    "PhaseExtractionError",
    "PropagationError",
    "ScheduleError",
    "constant_waveform",
    "cosine_ramp",
    "theta_from_omega",
    "assemble_schedule",
    "propagate",
    "propagator",
    "computational_propagator",
    "average_gate_fidelity",
    "leakage",
    "ideal_unitary",
    "extract_phases",
    "gate_fidelity",
    "evaluate_gate",
]

DEFAULT_DT = 0.001  # ns
SLOW_VARIATION_LIMIT = 0.01
JOIN_RTOL = 1e-9
MIRROR_TOL = 1e-8

GATE_KINDS = ("Z", "S", "T", "X", "HADAMARD", "CZ", "CZ_ALWAYS_ON")
PHASE_TARGETS = {"Z": math.pi, "S": math.pi / 2.0, "T": math.pi / 4.0}


class ScheduleError(ValueError):
    """Raised when a stage schedule is inconsistent or ill-formed."""


class PropagationError(RuntimeError):
    """Raised when the integrator fails or loses norm/unitarity."""


class PhaseExtractionError(ValueError):
    """Raised when a propagator does not match the expected gate pattern."""


def wrap_to_2pi(x: float) -> float:
    return float(np.mod(x, 2.0 * math.pi))


def principal_angle(x: float) -> float:
    """Wrap to (-pi, pi]."""
    return float(-((-x + math.pi) % (2.0 * math.pi) - math.pi))


# ---------------------------------------------------------------------------
# waveforms and stage schedules


@dataclass(frozen=True)
class Waveform:
    """A sampled control waveform on a local time axis starting at zero."""

    t: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.shape != t.shape or t.size < 2:
            raise ScheduleError("waveform needs matching 1-D t/values with >= 2 samples")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0.0):
            raise ScheduleError("waveform time axis must start at 0 and increase")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    @property
    def duration(self) -> float:
        return float(self.t[-1])

    @classmethod
    def from_any(cls, obj) -> "Waveform":
        """Accept anything with .t and .values (e.g. a FAQUAD segment)."""
        if isinstance(obj, cls):
            return obj
        return cls(np.asarray(obj.t, dtype=float), np.asarray(obj.values, dtype=float))

    def mirrored(self) -> "Waveform":
        return Waveform(self.duration - self.t[::-1], self.values[::-1])

    def interpolant(self) -> PchipInterpolator:
        return PchipInterpolator(self.t, self.values)


def constant_waveform(duration: float, value: float, n_samples: int = 33) -> Waveform:
    if duration <= 0.0:
        raise ScheduleError("constant waveform needs positive duration")
    t = np.linspace(0.0, duration, n_samples)
    return Waveform(t, np.full_like(t, value))


def cosine_ramp(duration: float, start: float, end: float, n_samples: int = 257) -> Waveform:
    """Half-cosine sweep from start to end with zero slope at both endpoints."""
    if duration <= 0.0:
        raise ScheduleError("cosine ramp needs positive duration")
    t = np.linspace(0.0, duration, n_samples)
    values = start + (end - start) * 0.5 * (1.0 - np.cos(math.pi * t / duration))
    return Waveform(t, values)


def _endpoint_check(name: str, got: float, want: float, scale: float) -> None:
    if abs(got - want) > JOIN_RTOL * max(abs(scale), 1e-12):
        raise ScheduleError(
            f"{name} endpoint {got!r} does not match the adjoining stage value {want!r}"
        )


@dataclass(frozen=True)
class StageSchedule:
    """The five-stage symmetric pulse: two amplitude ramps, two chirps, a hold.

    Stage 5 must mirror stage 1 and stage 4 must mirror stage 2; use
    :meth:`symmetric` to build the mirrors automatically.  ``None`` marks a
    zero-duration stage.  Amplitude ramps run from zero to ``Omega1``; chirps
    run from ``omega0`` to ``omega1``; the hold stays at ``omega1``.
    """

    omega0: float
    omega1: float
    Omega1: float
    ramp_up: Waveform | None
    chirp_up: Waveform | None
    hold: Waveform | None
    chirp_down: Waveform | None
    ramp_down: Waveform | None

    def __post_init__(self) -> None:
        if self.omega0 <= 0.0 or self.omega1 <= 0.0:
            raise ScheduleError("instantaneous frequencies must be positive")
        if self.Omega1 < 0.0:
            raise ScheduleError("drive amplitude must be non-negative")
        for name in ("ramp_up", "chirp_up", "hold", "chirp_down", "ramp_down"):
            wave = getattr(self, name)
            if wave is not None:
                object.__setattr__(self, name, Waveform.from_any(wave))
        if (self.ramp_up is None) != (self.ramp_down is None):
            raise ScheduleError("amplitude ramps must be present or absent together")
        if (self.chirp_up is None) != (self.chirp_down is None):
            raise ScheduleError("frequency chirps must be present or absent together")
        if self.chirp_up is None and self.hold is not None:
            raise ScheduleError("a hold stage requires the chirp stages")
        if self.ramp_up is None and self.chirp_up is None:
            raise ScheduleError("schedule needs at least one non-empty stage")
        self._validate_joins()

    @classmethod
    def symmetric(
        cls,
        omega0: float,
        omega1: float,
        Omega1: float,
        ramp: Waveform | None = None,
        chirp: Waveform | None = None,
        hold: Waveform | None = None,
    ) -> "StageSchedule":
        ramp = Waveform.from_any(ramp) if ramp is not None else None
        chirp = Waveform.from_any(chirp) if chirp is not None else None
        return cls(
            omega0=omega0,
            omega1=omega1,
            Omega1=Omega1,
            ramp_up=ramp,
            chirp_up=chirp,
            hold=hold,
            chirp_down=chirp.mirrored() if chirp is not None else None,
            ramp_down=ramp.mirrored() if ramp is not None else None,
        )

    def _validate_joins(self) -> None:
        if self.ramp_up is not None:
            _endpoint_check("ramp_up start", self.ramp_up.values[0], 0.0, self.Omega1)
            _endpoint_check("ramp_up end", self.ramp_up.values[-1], self.Omega1, self.Omega1)
            mismatch = np.max(np.abs(self.ramp_down.values - self.ramp_up.values[::-1]))
            if mismatch > MIRROR_TOL * max(self.Omega1, 1e-12):
                raise ScheduleError("stage 5 is not the mirror of stage 1")
        if self.chirp_up is not None:
            scale = max(abs(self.omega0), abs(self.omega1))
            _endpoint_check("chirp_up start", self.chirp_up.values[0], self.omega0, scale)
            _endpoint_check("chirp_up end", self.chirp_up.values[-1], self.omega1, scale)
            mismatch = np.max(np.abs(self.chirp_down.values - self.chirp_up.values[::-1]))
            if mismatch > MIRROR_TOL * scale:
                raise ScheduleError("stage 4 is not the mirror of stage 2")
        if self.hold is not None:
            scale = abs(self.omega1)
            _endpoint_check("hold start", self.hold.values[0], self.omega1, scale)
            _endpoint_check("hold end", self.hold.values[-1], self.omega1, scale)

    @property
    def t_a(self) -> float:
        return self.ramp_up.duration if self.ramp_up is not None else 0.0

    @property
    def t_omega(self) -> float:
        return self.chirp_up.duration if self.chirp_up is not None else 0.0

    @property
    def t_h(self) -> float:
        return self.hold.duration if self.hold is not None else 0.0

    @property
    def t_g(self) -> float:
        return 2.0 * self.t_a + 2.0 * self.t_omega + self.t_h

    def timings(self) -> dict:
        return {"t_a": self.t_a, "t_omega": self.t_omega, "t_h": self.t_h, "t_g": self.t_g}


# ---------------------------------------------------------------------------
# assembled schedule


@dataclass(frozen=True)
class PulseSchedule:
    """Drive waveforms sampled on a uniform time grid.

    ``theta`` is the accumulated drive phase, theta(0) = 0.
    """

    t: np.ndarray
    Omega: np.ndarray
    omega_inst: np.ndarray
    theta: np.ndarray
    timings: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        for name in ("Omega", "omega_inst", "theta"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != t.shape:
                raise ScheduleError(f"{name} shape does not match the time grid")
            object.__setattr__(self, name, arr)
        if t.ndim != 1 or t.size < 2:
            raise ScheduleError("schedule needs a 1-D time grid with >= 2 samples")
        steps = np.diff(t)
        if np.any(steps <= 0.0) or np.max(steps) - np.min(steps) > 1e-9 * np.mean(steps):
            raise ScheduleError("time grid must be uniform and increasing")
        object.__setattr__(self, "t", t)
        if np.any(self.Omega < 0.0):
            raise ScheduleError("drive amplitude must stay non-negative")
        if np.any(self.omega_inst <= 0.0):
            raise ScheduleError("instantaneous frequency must stay positive")
        if self.theta[0] != 0.0 or np.any(np.diff(self.theta) < 0.0):
            raise ScheduleError("drive phase must start at zero and be non-decreasing")
        self._check_slow_variation()

    def _check_slow_variation(self) -> None:
        d_omega = np.gradient(self.omega_inst, self.t)
        d_amp = np.gradient(self.Omega, self.t)
        ratio = np.maximum(np.abs(d_omega), np.abs(d_amp)) / self.omega_inst**2
        worst = int(np.argmax(ratio))
        if ratio[worst] >= SLOW_VARIATION_LIMIT:
            raise ScheduleError(
                "slow-variation bound violated at t = "
                f"{self.t[worst]:.6f} ns (ratio {ratio[worst]:.3e})"
            )

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def duration(self) -> float:
        return float(self.t[-1])

    def to_csv(self) -> str:
        lines = ["t_ns,Omega_rad_per_ns,omega_inst_rad_per_ns,theta_rad"]
        for ti, Oi, wi, thi in zip(self.t, self.Omega, self.omega_inst, self.theta):
            lines.append(f"{ti:.17g},{Oi:.17g},{wi:.17g},{thi:.17g}")
        return "\n".join(lines) + "\n"


def theta_from_omega(t: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Accumulated drive phase from the instantaneous frequency."""
    t = np.asarray(t, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if t.shape != omega.shape or t.ndim != 1:
        raise ValueError("t and omega must be matching 1-D arrays")
    return cumulative_trapezoid(omega, t, initial=0.0)


def assemble_schedule(stages: StageSchedule, dt: float = DEFAULT_DT) -> PulseSchedule:
    """Sample the five-stage waveform on a uniform grid and integrate theta."""
    if dt <= 0.0:
        raise ScheduleError("dt must be positive")
    t_g = stages.t_g
    n = max(2, int(round(t_g / dt)))
    t = np.linspace(0.0, t_g, n + 1)

    t_a, t_w, t_h = stages.t_a, stages.t_omega, stages.t_h
    bounds = np.array([t_a, t_a + t_w, t_a + t_w + t_h, t_a + 2.0 * t_w + t_h])

    Omega = np.full_like(t, stages.Omega1)
    if stages.ramp_up is not None:
        up = stages.ramp_up.interpolant()
        head = t < bounds[0]
        tail = t > bounds[3]
        Omega[head] = up(t[head])
        Omega[tail] = up(t_g - t[tail])
    Omega = np.clip(Omega, 0.0, None)

    omega = np.full_like(t, stages.omega0)
    if stages.chirp_up is not None:
        chirp = stages.chirp_up.interpolant()
        rising = (t >= bounds[0]) & (t < bounds[1])
        falling = (t >= bounds[2]) & (t <= bounds[3])
        omega[rising] = chirp(t[rising] - t_a)
        omega[falling] = chirp(bounds[3] - t[falling])
        if stages.hold is not None:
            holding = (t >= bounds[1]) & (t < bounds[2])
            omega[holding] = stages.hold.interpolant()(t[holding] - bounds[1])

    theta = theta_from_omega(t, omega)
    return PulseSchedule(t, Omega, omega, theta, timings=stages.timings())


# ---------------------------------------------------------------------------
# propagation


def propagate(
    H0: np.ndarray,
    n_hat: np.ndarray,
    schedule: PulseSchedule,
    initial: np.ndarray,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    t_eval: np.ndarray | None = None,
    norm_tol: float = 1e-9,
    method: str = "DOP853",
) -> np.ndarray:
    """Integrate i d/dt psi = [H0 + Omega(t) cos(theta(t)) n_hat] psi.

    ``initial`` may be a single state vector or a matrix of column states.
    Returns the state(s) at the end of the schedule, or, when ``t_eval`` is
    given, an array of snapshots with the time axis first.
    """
    H0 = np.asarray(H0, dtype=complex)
    n_hat = np.asarray(n_hat, dtype=complex)
    dim = H0.shape[0]
    if H0.shape != (dim, dim) or n_hat.shape != (dim, dim):
        raise ValueError("H0 and n_hat must be square matrices of equal size")
    psi0 = np.asarray(initial, dtype=complex)
    single = psi0.ndim == 1
    if single:
        psi0 = psi0[:, None]
    if psi0.shape[0] != dim:
        raise ValueError("initial state dimension does not match the Hamiltonian")

    # Integrate in the interaction picture of the diagonalized static
    # Hamiltonian: psi = V exp(-i E t) chi.  This is an exact change of
    # variables (no rotating-wave approximation); it removes the fast bare
    # phases so the adaptive solver only has to resolve the drive.
    evals, V = np.linalg.eigh(H0)
    N_dressed = V.conj().T @ n_hat @ V
    chi0 = V.conj().T @ psi0

    ts, amps, thetas = schedule.t, schedule.Omega, schedule.theta
    n_col = psi0.shape[1]

    def rhs(time: float, y: np.ndarray) -> np.ndarray:
        amp = np.interp(time, ts, amps)
        drive = amp * math.cos(np.interp(time, ts, thetas))
        chi = y.reshape(dim, n_col)
        phase = np.exp(1j * evals * time)
        rotated = N_dressed @ (phase.conj()[:, None] * chi)
        return (-1j * drive * (phase[:, None] * rotated)).reshape(-1)

    times = (
        np.array([schedule.duration])
        if t_eval is None
        else np.asarray(t_eval, dtype=float)
    )
    # local error control needs headroom for the norm guard on the
    # accumulated global error
    sol = solve_ivp(
        rhs,
        (0.0, schedule.duration),
        chi0.reshape(-1),
        method=method,
        rtol=0.1 * rtol,
        atol=0.1 * atol,
        t_eval=times,
        dense_output=False,
    )
    if not sol.success:
        raise PropagationError(f"integration failed: {sol.message}")

    snapshots = sol.y.T.reshape(-1, dim, n_col)
    back = np.empty_like(snapshots)
    for i, time in enumerate(sol.t):
        back[i] = V @ (np.exp(-1j * evals * time)[:, None] * snapshots[i])
    finals = back[-1]
    norms0 = np.linalg.norm(psi0, axis=0)
    norms1 = np.linalg.norm(finals, axis=0)
    drift = np.max(np.abs(norms1 - norms0) / np.maximum(norms0, 1e-300))
    if drift > norm_tol:
        raise PropagationError(f"state norm drifted by {drift:.3e} during propagation")

    if t_eval is not None:
        return back[:, :, 0] if single else back
    return finals[:, 0] if single else finals


def propagator(
    H0: np.ndarray,
    n_hat: np.ndarray,
    schedule: PulseSchedule,
    unitarity_tol: float = 1e-8,
    **kwargs,
) -> np.ndarray:
    """Full-basis propagator for the schedule, checked for unitarity."""
    dim = np.asarray(H0).shape[0]
    U = propagate(H0, n_hat, schedule, np.eye(dim, dtype=complex), **kwargs)
    defect = np.max(np.abs(U.conj().T @ U - np.eye(dim)))
    if defect > unitarity_tol:
        raise PropagationError(f"propagator unitarity defect {defect:.3e}")
    return U


def computational_propagator(comp_states: np.ndarray, finals: np.ndarray) -> np.ndarray:
    """M[i, j] = <comp_i | final_j> for column-stacked states."""
    comp = np.asarray(comp_states, dtype=complex)
    fin = np.asarray(finals, dtype=complex)
    if comp.ndim != 2 or fin.ndim != 2 or comp.shape[0] != fin.shape[0]:
        raise ValueError("comp_states and finals must share the full-space dimension")
    return comp.conj().T @ fin


# ---------------------------------------------------------------------------
# scoring


def average_gate_fidelity(M: np.ndarray, U_ideal: np.ndarray) -> float:
    """F = [Tr(M^dag M) + |Tr(U^dag M)|^2] / (n (n + 1))."""
    M = np.asarray(M, dtype=complex)
    U = np.asarray(U_ideal, dtype=complex)
    n = U.shape[0]
    if M.shape != (n, n) or U.shape != (n, n):
        raise ValueError("M and U_ideal must be square matrices of equal size")
    tr_mm = float(np.trace(M.conj().T @ M).real)
    tr_um = abs(np.trace(U.conj().T @ M))
    return (tr_mm + tr_um**2) / (n * (n + 1))


def leakage(M: np.ndarray) -> float:
    """Population lost from the computational subspace, 1 - Tr(M^dag M)/n."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    return 1.0 - float(np.trace(M.conj().T @ M).real) / n


_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)


def ideal_unitary(kind: str, phases: Mapping[str, float] | None = None) -> np.ndarray:
    """Canonical target for a gate kind; optional phases dress the free family.

    Without ``phases`` the plain form is returned (relative phase pi for Z,
    pi/2 for S, pi/4 for T; the CZ diagonal; the textbook X and Hadamard).
    """
    phases = dict(phases or {})
    if kind in ("Z", "S", "T"):
        phi = phases.get("phi", PHASE_TARGETS[kind])
        return np.diag([1.0, np.exp(1j * phi)])
    if kind == "X":
        phi1 = phases.get("phi1", 0.0)
        phi2 = phases.get("phi2", 0.0)
        return np.array([[0.0, np.exp(1j * phi1)], [np.exp(1j * phi2), 0.0]])
    if kind == "HADAMARD":
        phi1 = phases.get("phi1", 0.0)
        phi2 = phases.get("phi2", 0.0)
        phi3 = phases.get("phi3", 0.0)
        left = np.diag([1.0, np.exp(1j * phi2)])
        right = np.diag([1.0, np.exp(1j * phi3)])
        return np.exp(1j * phi1) * (left @ _HADAMARD @ right)
    if kind in ("CZ", "CZ_ALWAYS_ON"):
        phi = phases.get("phi", math.pi)
        return np.diag([1.0, 1.0, 1.0, np.exp(1j * phi)])
    raise ValueError(f"unknown gate kind {kind!r}")


def _require(condition: bool, kind: str, detail: str) -> None:
    if not condition:
        raise PhaseExtractionError(f"propagator does not match the {kind} pattern: {detail}")


def _fit_hadamard(M: np.ndarray, n_grid: int = 2048) -> tuple[float, float, float]:
    """Phases (phi1, phi2, phi3) maximizing |Tr(H_family^dag M)|.

    For fixed phi3 the optimum over phi2 aligns the two column sums, which
    collapses the search to one dimension; a dense scan plus golden-section
    refinement keeps the result deterministic.
    """
    m00, m01, m10, m11 = M[0, 0], M[0, 1], M[1, 0], M[1, 1]

    def column_sums(phi3: float) -> tuple[complex, complex]:
        z = np.exp(-1j * phi3)
        return m00 + z * m01, m10 - z * m11

    def objective(phi3: float) -> float:
        a, b = column_sums(phi3)
        return abs(a) + abs(b)

    grid = np.linspace(0.0, 2.0 * math.pi, n_grid, endpoint=False)
    values = [objective(p) for p in grid]
    best = int(np.argmax(values))
    step = grid[1] - grid[0]
    lo, hi = grid[best] - step, grid[best] + step

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    for _ in range(80):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = objective(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = objective(x1)
    phi3 = principal_angle(0.5 * (lo + hi))

    a, b = column_sums(phi3)
    phi2 = principal_angle(float(np.angle(b) - np.angle(a))) if abs(b) > 0.0 else 0.0
    aligned = a + np.exp(-1j * phi2) * b
    phi1 = float(np.angle(aligned)) if abs(aligned) > 0.0 else 0.0
    return phi1, phi2, phi3


def extract_phases(M: np.ndarray, kind: str) -> tuple[dict, np.ndarray]:
    """Fitted phase freedoms of the gate family and the frame-corrected M.

    For CZ the virtual-Z phases are removed and ``phi`` is the remaining
    conditional phase; for the phase gates ``phi`` is the relative phase with
    the global phase discarded; for X and Hadamard the phases of the
    parameterized gate forms are fitted.  Raises when the propagator is not
    dominated by the expected pattern.
    """
    M = np.asarray(M, dtype=complex)
    if kind in ("Z", "S", "T"):
        _require(M.shape == (2, 2), kind, f"shape {M.shape}")
        _require(
            abs(M[0, 0]) > 0.5 and abs(M[1, 1]) > 0.5,
            kind,
            "diagonal not dominant",
        )
        gamma = float(np.angle(M[0, 0]))
        phi = wrap_to_2pi(float(np.angle(M[1, 1])) - gamma)
        corrected = np.exp(-1j * gamma) * M
        return {"phi": phi}, corrected
    if kind == "X":
        _require(M.shape == (2, 2), kind, f"shape {M.shape}")
        _require(
            abs(M[0, 1]) > 0.5 and abs(M[1, 0]) > 0.5,
            kind,
            "anti-diagonal not dominant",
        )
        phi1 = float(np.angle(M[0, 1]))
        phi2 = float(np.angle(M[1, 0]))
        corrected = np.diag([np.exp(-1j * phi1), np.exp(-1j * phi2)]) @ M
        return {"phi1": phi1, "phi2": phi2}, corrected
    if kind == "HADAMARD":
        _require(M.shape == (2, 2), kind, f"shape {M.shape}")
        _require(bool(np.all(np.abs(M) > 0.35)), kind, "entries far from balanced")
        phi1, phi2, phi3 = _fit_hadamard(M)
        left = np.diag([1.0, np.exp(-1j * phi2)])
        right = np.diag([1.0, np.exp(-1j * phi3)])
        corrected = np.exp(-1j * phi1) * (left @ M @ right)
        return {"phi1": phi1, "phi2": phi2, "phi3": phi3}, corrected
    if kind in ("CZ", "CZ_ALWAYS_ON"):
        _require(M.shape == (4, 4), kind, f"shape {M.shape}")
        diag = np.abs(np.diagonal(M))
        _require(bool(np.all(diag > 0.5)), kind, "diagonal not dominant")
        gamma = float(np.angle(M[0, 0]))
        beta_b = float(np.angle(M[1, 1])) - gamma
        beta_a = float(np.angle(M[2, 2])) - gamma
        phi = wrap_to_2pi(
            float(np.angle(M[3, 3])) + gamma
            - float(np.angle(M[1, 1]))
            - float(np.angle(M[2, 2]))
        )
        removal = np.diag(
            np.exp(-1j * np.array([gamma, gamma + beta_b, gamma + beta_a,
                                   gamma + beta_a + beta_b]))
        )
        corrected = removal @ M
        return {"phi": phi, "beta_a": beta_a, "beta_b": beta_b}, corrected
    raise ValueError(f"unknown gate kind {kind!r}")


def gate_fidelity(M: np.ndarray, kind: str, with_phase: bool = True) -> float:
    """Average gate fidelity against the gate family.

    The family's free phases (global phase, virtual Z for CZ, the fitted X
    and Hadamard phases) are maximized over in closed form.  With
    ``with_phase`` the phase gates are held to their target relative phase
    and CZ to a conditional phase of pi; without it those are left free too,
    which is the figure of merit for the hold-time optimization.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("M must be square")
    tr_mm = float(np.trace(M.conj().T @ M).real)
    if kind in ("Z", "S", "T"):
        if M.shape != (2, 2):
            raise ValueError("phase gates need a 2x2 propagator")
        if with_phase:
            trace = abs(M[0, 0] + np.exp(-1j * PHASE_TARGETS[kind]) * M[1, 1])
        else:
            trace = abs(M[0, 0]) + abs(M[1, 1])
    elif kind == "X":
        if M.shape != (2, 2):
            raise ValueError("X needs a 2x2 propagator")
        trace = abs(M[0, 1]) + abs(M[1, 0])
    elif kind == "HADAMARD":
        if M.shape != (2, 2):
            raise ValueError("Hadamard needs a 2x2 propagator")
        phi1, phi2, phi3 = _fit_hadamard(M)
        a = M[0, 0] + np.exp(-1j * phi3) * M[0, 1]
        b = M[1, 0] - np.exp(-1j * phi3) * M[1, 1]
        trace = (abs(a) + abs(b)) / math.sqrt(2.0)
    elif kind in ("CZ", "CZ_ALWAYS_ON"):
        if M.shape != (4, 4):
            raise ValueError("CZ needs a 4x4 propagator")
        diag = np.abs(np.diagonal(M))
        if with_phase:
            phases, _ = extract_phases(M, kind)
            trace = abs(diag[0] + diag[1] + diag[2]
                        + diag[3] * np.exp(1j * (phases["phi"] - math.pi)))
        else:
            trace = float(np.sum(diag))
    else:
        raise ValueError(f"unknown gate kind {kind!r}")
    return (tr_mm + trace**2) / (n * (n + 1))


# ---------------------------------------------------------------------------
# gate reports


@dataclass
class GateReport:
    """Outcome of simulating one gate schedule."""

    gate: str
    M: np.ndarray
    corrected: np.ndarray
    final_states: np.ndarray
    phases: dict
    control_error: float
    fidelity: float
    leakage: float
    timings: dict
    dt: float

    def __post_init__(self) -> None:
        if self.leakage < -1e-10:
            raise ValueError(f"leakage {self.leakage!r} below the rounding floor")
        if not -1e-9 <= self.control_error <= 1.0 + 1e-9:
            raise ValueError(f"control error {self.control_error!r} outside [0, 1]")

    def to_json_dict(self) -> dict:
        def complex_matrix(arr: np.ndarray) -> dict:
            return {"re": np.real(arr).tolist(), "im": np.imag(arr).tolist()}

        return {
            "gate": self.gate,
            "control_error": self.control_error,
            "fidelity": self.fidelity,
            "leakage": self.leakage,
            "phases": {k: float(v) for k, v in self.phases.items()},
            "timings": {k: float(v) for k, v in self.timings.items()},
            "dt": self.dt,
            "M": complex_matrix(self.M),
            "corrected": complex_matrix(self.corrected),
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)


def evaluate_gate(
    H0: np.ndarray,
    n_hat: np.ndarray,
    schedule: StageSchedule | PulseSchedule,
    comp_states: np.ndarray,
    kind: str,
    frame_energies: Sequence[float] | None = None,
    comp_states_final: np.ndarray | None = None,
    dt: float = DEFAULT_DT,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> GateReport:
    """Propagate the computational basis through a schedule and score the gate.

    ``frame_energies`` rotates row i of M by exp(+i E_i t_g), i.e. reports the
    propagator in the frame co-rotating with those energies; phase gates are
    scored in the frame of the undriven qubit, while the conditional phase of
    a CZ is taken in the lab frame.  ``comp_states_final`` supplies different
    projection bras for the final time (used when the computational basis is
    a set of Floquet modes whose lab-frame form depends on the drive phase).
    """
    if kind not in GATE_KINDS:
        raise ValueError(f"unknown gate kind {kind!r}")
    pulse = schedule if isinstance(schedule, PulseSchedule) else assemble_schedule(schedule, dt)
    comp = np.asarray(comp_states, dtype=complex)
    finals = propagate(H0, n_hat, pulse, comp, rtol=rtol, atol=atol)
    bras = comp if comp_states_final is None else np.asarray(comp_states_final, dtype=complex)
    M = computational_propagator(bras, finals)
    if frame_energies is not None:
        energies = np.asarray(frame_energies, dtype=float)
        if energies.shape != (M.shape[0],):
            raise ValueError("frame_energies must give one energy per basis state")
        M = np.diag(np.exp(1j * energies * pulse.duration)) @ M
    phases, corrected = extract_phases(M, kind)
    fidelity = gate_fidelity(M, kind, with_phase=True)
    timings = dict(pulse.timings) if pulse.timings else {"t_g": pulse.duration}
    return GateReport(
        gate=kind,
        M=M,
        corrected=corrected,
        final_states=finals,
        phases=phases,
        control_error=1.0 - fidelity,
        fidelity=fidelity,
        leakage=leakage(M),
        timings=timings,
        dt=pulse.dt,
    )
