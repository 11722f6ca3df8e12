"""Constant-adiabaticity synthesis against closed-form two-level oracles.

The two-level crossing H(lambda) = lambda sigma_z/2 + Delta sigma_x/2 has the
exact density Delta / (2 (lambda^2 + Delta^2)^(3/2)), which pins down the
numerator convention, the gap power, and the slowdown shape of the solved
waveform.  The realized constant must also satisfy the exact quadrature
identity c = integral(rho dlambda) / integral(s dt).
"""
import numpy as np
import pytest

from chirpgates import presets
from chirpgates.faquad import (
    AdiabaticityConfig,
    GapClosureError,
    ShootingError,
    WaveformSegment,
    adiabaticity_density,
    faquad_solve,
    smoothness_envelope,
    tabulate_density,
    verify_constant_adiabaticity,
)
from chirpgates.floquet import FloquetLabel, FloquetProblem, build_floquet, zero_amplitude_modes
from chirpgates.units import TWO_PI, ghz, mhz

SZ = np.diag([1.0, -1.0]).astype(complex)
SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def two_level(delta):
    return lambda lam: 0.5 * (lam * SZ + delta * SX)


def two_level_density(lam, delta):
    return delta / (2.0 * (lam ** 2 + delta ** 2) ** 1.5)


def crossing_config(delta, lo=-1.0, hi=1.0, n=201, **kw):
    return AdiabaticityConfig(pairs=((0, 1),), weights=(1.0,),
                              grid=np.linspace(lo, hi, n), **kw)


class TestEnvelope:
    def test_boundary_and_plateau_values(self):
        assert smoothness_envelope(0.0, 10.0) == 0.0
        assert smoothness_envelope(10.0, 10.0) == pytest.approx(0.0, abs=1e-15)
        assert smoothness_envelope(5.0, 10.0) == 1.0

    def test_rise_midpoints(self):
        assert smoothness_envelope(0.025 * 8.0, 8.0, r=0.05) == pytest.approx(0.5)
        assert smoothness_envelope(0.125 * 8.0, 8.0, r=0.25) == pytest.approx(0.5)

    def test_symmetry_and_continuity(self):
        t_g, r = 7.0, 0.1
        t = np.linspace(0.0, t_g, 1401)
        s = smoothness_envelope(t, t_g, r)
        np.testing.assert_allclose(s, s[::-1], atol=1e-12)
        assert np.all(np.abs(np.diff(s)) < 1.1 * np.pi / (2 * r * t_g) * (t[1] - t[0]))
        assert np.all((0.0 <= s) & (s <= 1.0))
        plateau = (t >= r * t_g) & (t <= (1 - r) * t_g)
        np.testing.assert_allclose(s[plateau], 1.0, atol=1e-12)

    def test_rejects_bad_fraction(self):
        with pytest.raises(ValueError):
            smoothness_envelope(1.0, 10.0, r=0.5)
        with pytest.raises(ValueError):
            smoothness_envelope(1.0, 10.0, r=0.0)


class TestDensity:
    def test_lambda_independent_hamiltonian_gives_zero(self):
        ham = lambda lam: np.diag([0.0, 1.0]).astype(complex)
        assert adiabaticity_density(ham, 0.3, [(0, 1)], [1.0]) == 0.0

    @pytest.mark.parametrize("lam", [-1.2, -0.3, 0.0, 0.45, 2.0])
    def test_two_level_closed_form(self, lam):
        delta = 0.5
        got = adiabaticity_density(two_level(delta), lam, [(0, 1)], [1.0])
        assert got == pytest.approx(two_level_density(lam, delta), rel=1e-7)

    def test_weight_linearity(self):
        ham = two_level(0.4)
        base = adiabaticity_density(ham, 0.2, [(0, 1)], [1.0])
        assert adiabaticity_density(ham, 0.2, [(0, 1)], [2.0]) == pytest.approx(2 * base)

    def test_worst_pair_wins(self):
        # three-level ladder where the upper transition is much softer
        def ham(lam):
            return np.diag([0.0, 1.0, 1.05]).astype(complex) + lam * np.array(
                [[0.0, 0.3, 0.0], [0.3, 0.0, 0.3], [0.0, 0.3, 0.0]], dtype=complex)
        rho_01 = adiabaticity_density(ham, 0.0, [(0, 1)], [1.0])
        rho_12 = adiabaticity_density(ham, 0.0, [(1, 2)], [1.0])
        both = adiabaticity_density(ham, 0.0, [(0, 1), (1, 2)], [1.0, 1.0])
        assert both == pytest.approx(max(rho_01, rho_12))
        assert rho_12 > rho_01

    def test_degenerate_pair_raises(self):
        with pytest.raises(GapClosureError, match=r"\(0, 1\)"):
            adiabaticity_density(two_level(1e-9), 0.0, [(0, 1)], [1.0])

    def test_non_hermitian_rejected(self):
        ham = lambda lam: np.array([[0.0, 1.0], [0.0, 1.0]], dtype=complex)
        with pytest.raises(ValueError):
            adiabaticity_density(ham, 0.1, [(0, 1)], [1.0])


class TestConfig:
    def test_validation(self):
        grid = np.linspace(0.0, 1.0, 21)
        with pytest.raises(ValueError):
            AdiabaticityConfig(pairs=(), weights=(), grid=grid)
        with pytest.raises(ValueError):
            AdiabaticityConfig(pairs=((0, 1),), weights=(1.0, 2.0), grid=grid)
        with pytest.raises(ValueError):
            AdiabaticityConfig(pairs=((0, 1),), weights=(-1.0,), grid=grid)
        with pytest.raises(ValueError):
            AdiabaticityConfig(pairs=((1, 1),), weights=(1.0,), grid=grid)
        with pytest.raises(ValueError):
            AdiabaticityConfig(pairs=((0, 1),), weights=(1.0,), grid=grid,
                               envelope_fraction=0.6)
        with pytest.raises(ValueError):
            AdiabaticityConfig(pairs=((0, 1),), weights=(1.0,), grid=grid[:10])
        with pytest.raises(ValueError):
            AdiabaticityConfig(pairs=((0, 1),), weights=(1.0,),
                               grid=np.concatenate([grid, grid[::-1]]))

    def test_tabulation_matches_pointwise_density(self):
        delta = 0.5
        config = crossing_config(delta)
        table = tabulate_density(two_level(delta), config)
        np.testing.assert_allclose(table.density,
                                   two_level_density(config.grid, delta), rtol=1e-6)
        assert table.min_gap() == pytest.approx(delta, rel=1e-9)
        assert table.warnings == []

    def test_gap_closure_names_location(self):
        config = crossing_config(1e-8, lo=-0.5, hi=0.5, n=21)
        with pytest.raises(GapClosureError, match="lambda"):
            tabulate_density(two_level(1e-8), config)


class TestSolve:
    def test_constant_density_limit_is_linear(self):
        # near-constant density (far-detuned two-level) with a thin envelope:
        # the plateau ramp is a straight line and c approaches d0 * span / t_g
        delta, r, t_g = 40.0, 0.01, 5.0
        config = crossing_config(delta, lo=-1.0, hi=1.0, envelope_fraction=r)
        seg = faquad_solve(two_level(delta), -1.0, 1.0, t_g, config, n_steps=4000)
        d0 = two_level_density(0.0, delta)
        assert seg.c_value == pytest.approx(d0 * 2.0 / ((1 - r) * t_g), rel=2e-3)
        assert seg.c_value == pytest.approx(d0 * 2.0 / t_g, rel=0.015)
        # plateau follows the envelope-delayed straight line
        plateau = (seg.t >= r * t_g) & (seg.t <= (1 - r) * t_g)
        expect = -1.0 + 2.0 * (seg.t - 0.5 * r * t_g) / ((1 - r) * t_g)
        np.testing.assert_allclose(seg.values[plateau], expect[plateau], atol=3e-3)

    def test_quadrature_identity_for_c(self):
        # rho dlambda = c s dt integrates to c = int rho dlam / ((1-r) t_g);
        # the closed-form antiderivative of rho is lambda/(2 Delta sqrt(lambda^2+Delta^2))
        delta, t_g, r = 0.25, 12.0, 0.05
        config = crossing_config(delta, n=401)
        seg = faquad_solve(two_level(delta), -1.0, 1.0, t_g, config)
        exact = 1.0 / (delta * np.hypot(1.0, delta))
        assert seg.c_value == pytest.approx(exact / ((1 - r) * t_g), rel=1e-4)

    def test_slowdown_at_the_crossing(self):
        delta = 0.2
        config = crossing_config(delta, n=801)
        seg = faquad_solve(two_level(delta), -1.0, 1.0, 10.0, config)
        inside = np.mean(np.abs(seg.values) < delta)
        assert inside > 2.5 * delta  # far beyond the uniform-ramp share
        seg.validate(-1.0, 1.0)

    def test_boundary_conditions_and_flat_ends(self):
        delta = 0.3
        config = crossing_config(delta)
        seg = faquad_solve(two_level(delta), -1.0, 0.7, 6.0, config)
        assert seg.values[0] == pytest.approx(-1.0, abs=1e-12)
        assert seg.values[-1] == pytest.approx(0.7, abs=1e-9)
        dt = seg.t[1] - seg.t[0]
        peak = np.max(np.abs(np.diff(seg.values))) / dt
        assert abs(seg.values[1] - seg.values[0]) / dt < 1e-3 * peak
        assert abs(seg.values[-1] - seg.values[-2]) / dt < 1e-3 * peak

    def test_time_reversal_mirror(self):
        delta = 0.3
        config = crossing_config(delta, n=401)
        fwd = faquad_solve(two_level(delta), -1.0, 1.0, 8.0, config)
        rev = faquad_solve(two_level(delta), 1.0, -1.0, 8.0, config)
        np.testing.assert_allclose(rev.values, fwd.values[::-1], atol=2e-8 * 2.0)
        assert rev.c_value == pytest.approx(fwd.c_value, rel=1e-6)

    def test_c_scales_inversely_with_duration(self):
        delta = 0.4
        config = crossing_config(delta)
        ham = two_level(delta)
        table = tabulate_density(ham, config)
        c1 = faquad_solve(ham, -1.0, 1.0, 4.0, config, table=table).c_value
        c2 = faquad_solve(ham, -1.0, 1.0, 8.0, config, table=table).c_value
        assert c1 == pytest.approx(2.0 * c2, rel=0.01)

    def test_rejects_equal_endpoints_and_uncovered_path(self):
        config = crossing_config(0.3)
        with pytest.raises(ValueError):
            faquad_solve(two_level(0.3), 0.5, 0.5, 4.0, config)
        with pytest.raises(ValueError):
            faquad_solve(two_level(0.3), -2.0, 1.0, 4.0, config)
        with pytest.raises(ValueError):
            faquad_solve(two_level(0.3), -1.0, 1.0, 4.0, config, n_steps=100)

    def test_reuses_precomputed_table(self):
        delta = 0.3
        config = crossing_config(delta)
        ham = two_level(delta)
        table = tabulate_density(ham, config)
        a = faquad_solve(ham, -1.0, 1.0, 6.0, config, table=table)
        b = faquad_solve(ham, -1.0, 1.0, 6.0, config)
        np.testing.assert_allclose(a.values, b.values, atol=0)

    def test_csv_export(self, tmp_path):
        config = crossing_config(0.3)
        seg = faquad_solve(two_level(0.3), -1.0, 1.0, 4.0, config)
        path = tmp_path / "segment.csv"
        seg.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t_ns,lambda_rad_per_ns"
        assert len(lines) == 1 + seg.t.size
        t0, v0 = map(float, lines[1].split(","))
        assert t0 == 0.0 and v0 == -1.0


class TestVerify:
    def test_constant_density_deviation_vanishes(self):
        delta = 40.0
        config = crossing_config(delta)
        ham = two_level(delta)
        seg = faquad_solve(ham, -1.0, 1.0, 5.0, config)
        rep = verify_constant_adiabaticity(seg, ham, config)
        assert rep.max_relative_deviation < 1e-3
        assert rep.within()

    def test_crossing_segment_within_five_percent(self):
        delta = 0.2
        config = crossing_config(delta, n=801)
        ham = two_level(delta)
        seg = faquad_solve(ham, -1.0, 1.0, 10.0, config)
        rep = verify_constant_adiabaticity(seg, ham, config)
        assert rep.within(0.05)
        assert 0.0 <= rep.worst_time <= 10.0

    def test_perturbed_waveform_is_flagged(self):
        delta = 0.2
        config = crossing_config(delta, n=801)
        ham = two_level(delta)
        seg = faquad_solve(ham, -1.0, 1.0, 10.0, config)
        bad = seg.values.copy()
        mid = slice(seg.t.size // 3, 2 * seg.t.size // 3)
        bad[mid] += 0.04 * np.sin(np.linspace(0.0, 6.0 * np.pi, bad[mid].size))
        rep = verify_constant_adiabaticity(
            WaveformSegment(t=seg.t, values=bad, c_value=seg.c_value), ham, config)
        assert rep.max_relative_deviation > 0.05


class TestExtendedSpaceRamp:
    """Amplitude ramp of the driven phase-gate transmon, in the full Floquet space."""

    def setup_method(self):
        dev = presets.z_gate_qubit()
        base = FloquetProblem.from_device(dev, 0.0, ghz(4.0), m_max=8)
        K0 = build_floquet(base)
        K1 = build_floquet(base.at(omega_amp=1.0))
        Kd = K1 - K0
        self.ham = lambda amp: K0 + amp * Kd
        self.base = base

    def _pair_indices(self, labels):
        # indices of product modes in ascending eigh order at amplitude 0
        evals, evecs = np.linalg.eigh(self.ham(0.0))
        modes = zero_amplitude_modes(self.base, labels)
        out = []
        for lab in labels:
            overlaps = np.abs(modes[lab].conj() @ evecs) ** 2
            out.append(int(np.argmax(overlaps)))
        return out

    def test_fast_ramp_meets_adiabaticity_shape(self):
        g1, e0, f1 = self._pair_indices([
            FloquetLabel(1, (0,)), FloquetLabel(0, (1,)), FloquetLabel(-1, (2,))])
        config = AdiabaticityConfig(
            pairs=((g1, e0), (e0, f1)), weights=(1.0, 1.0),
            grid=np.linspace(0.0, mhz(190.0), 48))
        table = tabulate_density(self.ham, config)
        assert np.all(table.density > 0)
        seg = faquad_solve(self.ham, 0.0, mhz(190.0), 4.0, config, table=table)
        seg.validate(0.0, mhz(190.0))
        rep = verify_constant_adiabaticity(seg, self.ham, config, table=table)
        assert rep.within(0.05)
        # the drive stays harmless for this ramp: c stays modest even at 4 ns
        assert seg.c_value < 1.0
