"""Constant-adiabaticity (FAQUAD) waveform synthesis.

Given a parameterized Hermitian operator H(lambda) and a set of transition
pairs to protect, the fast-quasiadiabatic schedule spends time where the
transitions are most fragile.  It integrates

    d lambda / dt = +/- c * s(t) / rho(lambda),

where rho is the worst-case weighted adiabaticity density

    rho(lambda) = max_i  w_i |<phi_p_i| dH/dlambda |phi_q_i>| / (E_p_i - E_q_i)^2,

s(t) is a half-cosine smoothness envelope taking the slope to zero at both
endpoints, and the constant c is fixed by shooting so the schedule meets the
requested boundary values.  Because rho dlambda = c s dt along a monotone
solution, c always scales as 1/t_g.

Pair indices reference eigenstates in ascending-energy order at the first
grid sample; along the rest of the grid the states are continued by maximum
overlap, so the density follows physical branches through avoided crossings.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import numpy.linalg as la
from scipy.interpolate import PchipInterpolator

from .hilbert import max_overlap_assignment
from .units import TWO_PI

#: Transition-gap floor (2*pi x 1 kHz in rad/ns); below it the pair set is
#: considered wrong and solves abort instead of regularizing.
GAP_FLOOR = TWO_PI * 1e-6


class GapClosureError(RuntimeError):
    """A protected transition gap fell below the degeneracy floor."""


class ShootingError(RuntimeError):
    """The bisection on the adiabaticity constant failed to converge."""


@dataclass(frozen=True, eq=False)
class AdiabaticityConfig:
    """Which transitions to protect and how to discretize the control axis.

    Parameters
    ----------
    pairs : sequence of (p, q)
        Index pairs into the tracked eigenstate set (ascending-energy order
        at the first grid sample).
    weights : sequence of float
        Positive weight per pair; the density takes the worst weighted pair.
    envelope_fraction : float
        Fraction r of the duration spent in each boundary half-cosine,
        0 < r < 1/2.
    grid : array
        Strictly monotone lambda samples (>= 16) used to tabulate gaps and
        matrix elements.
    """

    pairs: tuple
    weights: tuple
    envelope_fraction: float = 0.05
    grid: np.ndarray = None

    def __post_init__(self):
        pairs = tuple((int(p), int(q)) for p, q in self.pairs)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "weights", weights)
        if len(pairs) != len(weights) or not pairs:
            raise ValueError("need equally many pairs and weights, at least one each")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        if any(p == q for p, q in pairs):
            raise ValueError("a pair must reference two distinct states")
        if not 0.0 < self.envelope_fraction < 0.5:
            raise ValueError("envelope_fraction must lie in (0, 1/2)")
        grid = np.asarray(self.grid, dtype=float)
        object.__setattr__(self, "grid", grid)
        if grid.ndim != 1 or grid.size < 16:
            raise ValueError("grid must be 1-D with at least 16 samples")
        diffs = np.diff(grid)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("grid must be strictly monotone")


def smoothness_envelope(t, t_g: float, r: float = 0.05):
    """Boundary-smoothing envelope: half-cosine rise, unit plateau, half-cosine fall.

    Zero with zero slope at t = 0 and t = t_g; reaches 1 at t = r*t_g and
    stays there until (1-r)*t_g.
    """
    if not 0.0 < r < 0.5:
        raise ValueError("envelope fraction must lie in (0, 1/2)")
    if not t_g > 0:
        raise ValueError("duration must be positive")
    tt = np.asarray(t, dtype=float)
    edge = r * t_g
    rise = 0.5 * (1.0 - np.cos(np.pi * tt / edge))
    fall = 0.5 * (1.0 - np.cos(np.pi * (t_g - tt) / edge))
    out = np.where(tt < edge, rise, np.where(tt > t_g - edge, fall, 1.0))
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.ndim(t) == 0 else out


def _fix_gauge(vec: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest-magnitude component is positive real."""
    k = int(np.argmax(np.abs(vec)))
    phase = vec[k] / abs(vec[k])
    return vec / phase


def adiabaticity_density(hamiltonian: Callable[[float], np.ndarray], lam: float,
                         pairs, weights, step: Optional[float] = None,
                         gap_floor: float = GAP_FLOOR) -> float:
    """Worst weighted transition density at a single control value.

    Eigenstates are indexed in ascending-energy order at ``lam``; the
    derivative dH/dlambda is taken by central finite difference with step
    ``step`` (default 1e-6 scaled to |lam|).  A pair whose gap falls below
    ``gap_floor`` raises :class:`GapClosureError` naming the pair.
    """
    lam = float(lam)
    H = np.asarray(hamiltonian(lam))
    if la.norm(H - H.conj().T) > 1e-9 * max(1.0, la.norm(H)):
        raise ValueError("hamiltonian(lambda) must be Hermitian")
    if step is None:
        step = 1e-6 * max(1.0, abs(lam))
    evals, evecs = la.eigh(H)
    dH = (np.asarray(hamiltonian(lam + step)) - np.asarray(hamiltonian(lam - step))) / (2.0 * step)
    best = 0.0
    for (p, q), w in zip(pairs, weights):
        gap = evals[p] - evals[q]
        if abs(gap) < gap_floor:
            raise GapClosureError(
                f"pair ({p}, {q}) is degenerate at lambda={lam!r}: "
                f"gap {abs(gap):.3e} below floor {gap_floor:.3e}"
            )
        vp = _fix_gauge(evecs[:, p])
        vq = _fix_gauge(evecs[:, q])
        element = abs(vp.conj() @ dH @ vq)
        best = max(best, w * element / gap ** 2)
    return best


@dataclass
class DensityTable:
    """Adiabaticity density tabulated along the control grid.

    ``gaps`` and ``elements`` hold, per (sample, pair), the tracked energy
    difference E_p - E_q and |<phi_p|dH/dlambda|phi_q>|.  ``energies`` holds
    the tracked eigenvalues of every state referenced by some pair, keyed by
    its index at the first grid sample.
    """

    grid: np.ndarray
    density: np.ndarray
    gaps: np.ndarray
    elements: np.ndarray
    energies: dict
    pairs: tuple
    weights: tuple
    warnings: list = field(default_factory=list)

    def interpolant(self) -> PchipInterpolator:
        """Shape-preserving interpolant of the density (ascending grid)."""
        if self.grid[0] < self.grid[-1]:
            return PchipInterpolator(self.grid, self.density)
        return PchipInterpolator(self.grid[::-1], self.density[::-1])

    def min_gap(self, pair_index: int = None) -> float:
        g = np.abs(self.gaps) if pair_index is None else np.abs(self.gaps[:, pair_index])
        return float(g.min())

    @property
    def coverage(self) -> tuple:
        return (float(min(self.grid[0], self.grid[-1])),
                float(max(self.grid[0], self.grid[-1])))


def tabulate_density(hamiltonian: Callable[[float], np.ndarray],
                     config: AdiabaticityConfig,
                     gap_floor: float = GAP_FLOOR) -> DensityTable:
    """Tabulate the weighted worst-pair density along ``config.grid``.

    States referenced by the pairs are identified in ascending-energy order
    at the first grid sample and continued along the grid by maximum overlap
    with the previous sample; near-ties are recorded as warnings.  The model
    is evaluated only at grid points (and a half-spacing to each side for the
    derivative), so the cost is one dense diagonalization per sample.
    """
    grid = config.grid
    needed = sorted({i for pq in config.pairs for i in pq})
    pair_cols = {i: c for c, i in enumerate(needed)}
    step = 0.5 * np.min(np.abs(np.diff(grid)))

    n = grid.size
    density = np.empty(n)
    gaps = np.empty((n, len(config.pairs)))
    elements = np.empty((n, len(config.pairs)))
    energies = {i: np.empty(n) for i in needed}
    warnings = []

    tracked = None  # columns follow `needed`
    for j, lam in enumerate(grid):
        H = np.asarray(hamiltonian(float(lam)))
        if j == 0 and la.norm(H - H.conj().T) > 1e-9 * max(1.0, la.norm(H)):
            raise ValueError("hamiltonian(lambda) must be Hermitian")
        evals, evecs = la.eigh(H)
        if tracked is None:
            cols = list(needed)
        else:
            overlap2 = np.abs(tracked.conj().T @ evecs) ** 2
            assignment, warn = max_overlap_assignment(overlap2)
            for w in warn:
                warnings.append(f"sample {j} (lambda={lam:.9g}): {w}")
            cols = [assignment[c] for c in range(len(needed))]
        tracked = evecs[:, cols]
        for c in range(len(needed)):
            tracked[:, c] = _fix_gauge(tracked[:, c])
            energies[needed[c]][j] = evals[cols[c]]
        dH = (np.asarray(hamiltonian(float(lam) + step))
              - np.asarray(hamiltonian(float(lam) - step))) / (2.0 * step)
        for k, ((p, q), w) in enumerate(zip(config.pairs, config.weights)):
            vp = tracked[:, pair_cols[p]]
            vq = tracked[:, pair_cols[q]]
            gap = energies[p][j] - energies[q][j]
            if abs(gap) < gap_floor:
                raise GapClosureError(
                    f"pair ({p}, {q}) gap {abs(gap):.3e} below floor "
                    f"{gap_floor:.3e} at lambda={lam:.9g}"
                )
            gaps[j, k] = gap
            elements[j, k] = abs(vp.conj() @ dH @ vq)
        density[j] = max(w * elements[j, k] / gaps[j, k] ** 2
                         for k, w in enumerate(config.weights))
    return DensityTable(grid=grid.copy(), density=density, gaps=gaps,
                        elements=elements, energies=energies,
                        pairs=config.pairs, weights=config.weights,
                        warnings=warnings)


@dataclass
class WaveformSegment:
    """One solved control segment: uniform time samples, values, realized constant."""

    t: np.ndarray
    values: np.ndarray
    c_value: float

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def slope(self) -> np.ndarray:
        return np.gradient(self.values, self.t)

    def validate(self, lambda_start: float, lambda_end: float, rtol: float = 1e-9) -> None:
        """Boundary values, monotonicity, and zero endpoint slope."""
        span = abs(lambda_end - lambda_start)
        scale = max(abs(lambda_start), abs(lambda_end), span)
        if abs(self.values[0] - lambda_start) > rtol * scale:
            raise ValueError(
                f"segment starts at {self.values[0]!r}, requested {lambda_start!r}")
        if abs(self.values[-1] - lambda_end) > rtol * scale:
            raise ValueError(
                f"segment ends at {self.values[-1]!r}, requested {lambda_end!r}")
        diffs = np.diff(self.values)
        sign = np.sign(lambda_end - lambda_start)
        if np.any(sign * diffs < -rtol * scale):
            raise ValueError("segment is not monotone between its endpoints")
        dt = self.t[1] - self.t[0]
        peak = np.max(np.abs(diffs)) / dt
        if peak > 0:
            for edge in (abs(diffs[0]), abs(diffs[-1])):
                if edge / dt > 1e-3 * peak:
                    raise ValueError("segment slope does not vanish at the boundary")

    def mirrored(self) -> "WaveformSegment":
        """Time-reversed copy running the same path backwards."""
        return WaveformSegment(t=self.t.copy(), values=self.values[::-1].copy(),
                               c_value=self.c_value)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t_ns,lambda_rad_per_ns\n")
            for t, v in zip(self.t, self.values):
                fh.write(f"{t:.17g},{v:.17g}\n")


def _fast_lookup(xs: np.ndarray, ys: np.ndarray):
    """Scalar linear interpolation closure; clamps outside the table.

    The shooting loop evaluates the density millions of times, so this
    avoids per-call interpolator overhead.  The dense table is sampled from
    the shape-preserving interpolant, which keeps values positive.
    """
    lo = float(xs[0])
    inv = (xs.size - 1) / float(xs[-1] - xs[0])
    top = xs.size - 1
    y = [float(v) for v in ys]

    def evaluate(x: float) -> float:
        u = (x - lo) * inv
        if u <= 0.0:
            return y[0]
        if u >= top:
            return y[top]
        i = int(u)
        return y[i] + (y[i + 1] - y[i]) * (u - i)

    return evaluate


def _integrate(rho_fast, s_start, s_half, dt: float, lam0: float,
               direction_c: float, n_steps: int) -> np.ndarray:
    """Fixed-step RK4 for d lambda/dt = direction * c * s(t) / rho(lambda).

    The envelope is pretabulated at step starts and midpoints; only the
    density is evaluated per stage.
    """
    lam = np.empty(n_steps + 1)
    lam[0] = x = lam0
    for i in range(n_steps):
        k1 = direction_c * s_start[i] / rho_fast(x)
        k2 = direction_c * s_half[i] / rho_fast(x + 0.5 * dt * k1)
        k3 = direction_c * s_half[i] / rho_fast(x + 0.5 * dt * k2)
        k4 = direction_c * s_start[i + 1] / rho_fast(x + dt * k3)
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        lam[i + 1] = x
    return lam


def faquad_solve(hamiltonian: Callable[[float], np.ndarray], lambda_start: float,
                 lambda_end: float, t_g: float, config: AdiabaticityConfig,
                 n_steps: int = 2000, max_bisect: int = 200,
                 boundary_rtol: float = 1e-9, gap_floor: float = GAP_FLOOR,
                 table: Optional[DensityTable] = None) -> WaveformSegment:
    """Solve the constant-adiabaticity schedule between two control values.

    The adiabaticity constant is found by bisection (at most ``max_bisect``
    iterations) so the fixed-step RK4 trajectory meets ``lambda_end`` to
    ``boundary_rtol`` relative.  A precomputed ``table`` covering the path is
    reused when given; otherwise the density is tabulated on ``config.grid``.
    """
    lambda_start = float(lambda_start)
    lambda_end = float(lambda_end)
    if lambda_start == lambda_end:
        raise ValueError("lambda_start and lambda_end must differ")
    if n_steps < 2000:
        raise ValueError("need at least 2000 integration steps")
    if table is None:
        table = tabulate_density(hamiltonian, config, gap_floor=gap_floor)
    lo_cov, hi_cov = table.coverage
    path_lo, path_hi = min(lambda_start, lambda_end), max(lambda_start, lambda_end)
    slack = 1e-9 * max(abs(lo_cov), abs(hi_cov), 1.0)
    if path_lo < lo_cov - slack or path_hi > hi_cov + slack:
        raise ValueError("density table does not cover the requested path")

    rho = table.interpolant()
    r = config.envelope_fraction
    direction = 1.0 if lambda_end > lambda_start else -1.0

    dense_x = np.linspace(lo_cov, hi_cov, 8193)
    rho_fast = _fast_lookup(dense_x, rho(dense_x))
    dt = t_g / n_steps
    times = np.linspace(0.0, t_g, n_steps + 1)
    s_start = smoothness_envelope(times, t_g, r)
    s_half = smoothness_envelope(times[:-1] + 0.5 * dt, t_g, r)

    # rho dlambda = c s dt along the solution, so quadrature pins c up to
    # discretization; bisection then matches the discrete integrator exactly
    c0 = float(abs(rho.antiderivative()(lambda_end) - rho.antiderivative()(lambda_start)))
    c0 /= (1.0 - r) * t_g
    if not np.isfinite(c0) or c0 <= 0:
        raise ShootingError("quadrature estimate of the adiabaticity constant failed")

    def overshoot(c):
        lam = _integrate(rho_fast, s_start, s_half, dt, lambda_start,
                         direction * c, n_steps)
        return (lam[-1] - lambda_end) * direction, lam

    tol = boundary_rtol * max(abs(lambda_start), abs(lambda_end),
                              abs(lambda_end - lambda_start))
    c_lo, c_hi = 0.5 * c0, 2.0 * c0
    f_lo, lam = overshoot(c_lo)
    iterations = 0
    while f_lo > 0 and iterations < 60:
        c_hi, c_lo = c_lo, 0.5 * c_lo
        f_lo, lam = overshoot(c_lo)
        iterations += 1
    f_hi, lam = overshoot(c_hi)
    while f_hi < 0 and iterations < 120:
        c_lo, c_hi = c_hi, 2.0 * c_hi
        f_hi, lam = overshoot(c_hi)
        iterations += 1
    if f_lo > 0 or f_hi < 0:
        raise ShootingError("could not bracket the adiabaticity constant")

    c = c_hi
    for _ in range(max_bisect):
        c = 0.5 * (c_lo + c_hi)
        miss, lam = overshoot(c)
        if abs(miss) <= tol:
            break
        if miss > 0:
            c_hi = c
        else:
            c_lo = c
    else:
        raise ShootingError(
            f"bisection did not converge in {max_bisect} iterations "
            f"(residual {abs(miss):.3e}, tolerance {tol:.3e})")

    lam[-1] = lambda_end  # remove the accepted sub-tolerance miss
    segment = WaveformSegment(t=times, values=lam, c_value=float(c))
    segment.validate(lambda_start, lambda_end, rtol=max(boundary_rtol, 1e-9))
    return segment


@dataclass
class AdiabaticityReport:
    """Plateau constancy of density x speed / envelope against the realized c."""

    c_value: float
    max_relative_deviation: float
    worst_time: float

    def within(self, tolerance: float = 0.05) -> bool:
        return self.max_relative_deviation <= tolerance


def verify_constant_adiabaticity(segment: WaveformSegment,
                                 hamiltonian: Callable[[float], np.ndarray],
                                 config: AdiabaticityConfig,
                                 table: Optional[DensityTable] = None) -> AdiabaticityReport:
    """Check that rho(lambda) |dlambda/dt| / s(t) stays at c on the plateau.

    The plateau is [r*t_g, (1-r)*t_g]; the boundary fractions are excluded
    because the envelope sends the speed to zero there by construction.
    """
    if table is None:
        table = tabulate_density(hamiltonian, config)
    rho = table.interpolant()
    t = segment.t
    t_g = segment.duration
    r = config.envelope_fraction
    speed = np.abs(np.gradient(segment.values, t))
    mask = (t >= r * t_g) & (t <= (1.0 - r) * t_g)
    envelope = smoothness_envelope(t[mask], t_g, r)
    lo, hi = table.coverage
    quotient = rho(np.clip(segment.values[mask], lo, hi)) * speed[mask] / envelope
    deviation = np.abs(quotient - segment.c_value) / segment.c_value
    worst = int(np.argmax(deviation))
    return AdiabaticityReport(
        c_value=segment.c_value,
        max_relative_deviation=float(deviation[worst]),
        worst_time=float(t[mask][worst]),
    )
