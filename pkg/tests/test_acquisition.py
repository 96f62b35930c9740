import math

import numpy as np
import pytest

from starspin.acquisition import (
    Fid,
    SignalModelParams,
    analytic_signal,
    antiphase_pair_factor,
    extract_peak_phases,
    fit_decay,
    inverse_spectrum,
    spectrum,
    telegraph_coherence_factor,
    telegraph_conditional_factor,
    transverse_signal,
)
from starspin.core import DensityMatrix, Spin, SpinSystem
from starspin.hamiltonian import build_hamiltonian, detection_frame
from starspin.acquisition import acquire_fid

J = 2 * np.pi * 38.4
W0 = 2 * np.pi * 100.0


def three_line_fid(theta, kind, t2=0.5, points=4096, dwell=1e-3):
    t = np.arange(points) * dwell
    sig = analytic_signal(SignalModelParams(theta, J, W0, t2), kind, t)
    return Fid(sig, dwell)


class TestAnalyticSignal:
    def test_printed_form_at_time_zero_is_cos_theta(self):
        for theta in (0.0, 0.5, 1.2):
            v = analytic_signal(
                SignalModelParams(theta, J, W0, 0.5), "center_field", 0.0, convention="printed"
            )
            assert complex(v) == pytest.approx(math.cos(theta))

    def test_zero_phase_makes_models_coincide(self):
        t = np.linspace(0.0, 0.5, 400)
        p = SignalModelParams(0.0, J, W0, 0.2)
        for conv in ("printed", "quadrature"):
            a = analytic_signal(p, "center_field", t, convention=conv)
            b = analytic_signal(p, "side_field", t, convention=conv)
            assert np.max(np.abs(a - b)) < 1e-14

    def test_infinite_t2_means_no_decay(self):
        p = SignalModelParams(0.3, J, W0)
        t = np.array([0.0, 1.0, 5.0])
        v = analytic_signal(p, "center_field", t)
        assert np.allclose(np.abs(v) > 0, True)
        # envelope periodic, no decay: |S(t)| at J-commensurate times equals |S(0)|
        t_period = 2 * np.pi / J
        assert abs(analytic_signal(p, "center_field", t_period)) == pytest.approx(
            abs(analytic_signal(p, "center_field", 0.0))
        )

    def test_side_field_peak_phases_at_jt2_22(self):
        theta = math.radians(50.0)
        fid = three_line_fid(theta, "side_field", t2=22.0 / J)
        spec = spectrum(fid, zero_fill=2)
        peaks = extract_peak_phases(spec, [W0 - J, W0, W0 + J], J / 4.0)
        by_freq = sorted(peaks, key=lambda p: -p.center_rads)
        got = [math.degrees(p.phase_rad) for p in by_freq]
        assert got[0] == pytest.approx(100.0, abs=0.5)
        assert got[1] == pytest.approx(0.0, abs=0.5)
        assert got[2] == pytest.approx(-100.0, abs=0.5)

    def test_center_field_peak_phases(self):
        theta = math.radians(50.0)
        fid = three_line_fid(theta, "center_field", t2=22.0 / J)
        spec = spectrum(fid, zero_fill=2)
        for p in extract_peak_phases(spec, [W0 - J, W0, W0 + J], J / 4.0):
            assert math.degrees(p.phase_rad) == pytest.approx(50.0, abs=0.5)

    def test_bad_kind_and_convention(self):
        p = SignalModelParams(0.0, J, W0)
        with pytest.raises(ValueError):
            analytic_signal(p, "mystery", 0.0)
        with pytest.raises(ValueError):
            analytic_signal(p, "center_field", 0.0, convention="polar")


class TestAcquireFid:
    def test_no_transverse_coherence_gives_zero(self):
        sys = SpinSystem((Spin("CC", "13C", 0.0),))
        h = build_hamiltonian(sys, np.zeros(1))
        rho = DensityMatrix(np.diag([1.0, 0.0]).astype(complex), sys.names)
        fid, _ = acquire_fid(rho, h, None, 64, 1e-3)
        assert np.max(np.abs(fid.samples)) < 1e-14

    def test_single_spin_precession(self):
        sys = SpinSystem((Spin("CC", "13C", 10.0),), {}, 1e8)
        w = 2 * np.pi * 40.0
        h = build_hamiltonian(sys, detection_frame(sys, "CC", w))
        rho = DensityMatrix(0.5 * np.ones((2, 2), dtype=complex), sys.names)
        fid, _ = acquire_fid(rho, h, None, 256, 5e-4)
        t = fid.times
        assert np.max(np.abs(fid.samples - np.exp(1j * w * t))) < 1e-10

    def test_observable_normalization(self):
        # |+> has unit transverse signal under the 2|0><1| readout
        rho = DensityMatrix(0.5 * np.ones((2, 2), dtype=complex), ("CC",))
        assert transverse_signal(rho) == pytest.approx(1.0)

    def test_missing_observe_spin(self):
        sys = SpinSystem((Spin("A", "13C", 0.0),))
        h = build_hamiltonian(sys, np.zeros(1))
        rho = DensityMatrix(np.eye(2, dtype=complex) / 2.0, sys.names)
        with pytest.raises(KeyError):
            acquire_fid(rho, h, None, 16, 1e-3, observe="CC")


class TestSpectrum:
    def test_pure_tone_peaks_at_its_frequency(self):
        dwell = 1e-3
        t = np.arange(2048) * dwell
        fid = Fid(np.exp(1j * W0 * t), dwell)
        spec = spectrum(fid, zero_fill=2)
        peak_freq = spec.freq_rads[np.argmax(np.abs(spec.bins))]
        assert abs(peak_freq - W0) <= spec.bin_width_rads

    def test_three_peaks_separated_by_coupling(self):
        fid = three_line_fid(0.0, "center_field", t2=0.3)
        spec = spectrum(fid, zero_fill=2)
        for center in (W0 - J, W0, W0 + J):
            mask = np.abs(spec.freq_rads - center) <= J / 4
            local = np.abs(spec.bins[mask])
            peak_freq = spec.freq_rads[mask][np.argmax(local)]
            assert abs(peak_freq - center) <= spec.bin_width_rads

    def test_linearity(self):
        f1 = three_line_fid(0.2, "center_field")
        f2 = three_line_fid(0.9, "side_field")
        mix = Fid(1.7 * f1.samples - 0.4j * f2.samples, f1.dwell_s)
        s_mix = spectrum(mix, zero_fill=2)
        s1 = spectrum(f1, zero_fill=2)
        s2 = spectrum(f2, zero_fill=2)
        assert np.max(np.abs(s_mix.bins - (1.7 * s1.bins - 0.4j * s2.bins))) < 1e-10

    def test_inverse_round_trip(self):
        fid = three_line_fid(0.5, "side_field", points=512)
        spec = spectrum(fid, zero_fill=1)
        back = inverse_spectrum(spec, fid.dwell_s)
        assert np.max(np.abs(back.samples - fid.samples)) < 1e-10

    def test_parseval(self):
        fid = three_line_fid(0.1, "center_field", points=1024)
        spec = spectrum(fid, zero_fill=1)
        energy_t = np.sum(np.abs(fid.samples) ** 2)
        energy_f = np.sum(np.abs(spec.bins) ** 2) / spec.bins.size
        assert energy_f == pytest.approx(energy_t, rel=1e-9)

    def test_ppm_axis_places_observed_spin(self):
        fid = three_line_fid(0.0, "center_field")
        spec = spectrum(fid, zero_fill=1, ppm_axis=(62.6, W0, 125.76e6))
        idx = np.argmin(np.abs(spec.freq_rads - W0))
        assert spec.ppm[idx] == pytest.approx(62.6, abs=1e-3)


class TestExtractPeakPhases:
    def test_scaling_invariance(self):
        fid = three_line_fid(0.7, "side_field", t2=0.2)
        spec = spectrum(fid, zero_fill=2)
        scaled = spectrum(Fid(fid.samples * 7.3, fid.dwell_s), zero_fill=2)
        a = extract_peak_phases(spec, [W0 - J, W0, W0 + J], J / 4)
        b = extract_peak_phases(scaled, [W0 - J, W0, W0 + J], J / 4)
        for pa, pb in zip(a, b):
            assert pb.phase_rad == pytest.approx(pa.phase_rad, abs=1e-9)
            assert pb.amplitude == pytest.approx(7.3 * pa.amplitude, rel=1e-9)

    def test_zero_phase_everywhere(self):
        fid = three_line_fid(0.0, "side_field", t2=0.2)
        spec = spectrum(fid, zero_fill=2)
        for p in extract_peak_phases(spec, [W0 - J, W0, W0 + J], J / 4):
            assert abs(p.phase_rad) < math.radians(0.05)

    def test_overlapping_windows_rejected(self):
        fid = three_line_fid(0.0, "center_field")
        spec = spectrum(fid, zero_fill=1)
        with pytest.raises(ValueError, match="overlap"):
            extract_peak_phases(spec, [W0, W0 + J], J)

    def test_empty_window_rejected(self):
        fid = three_line_fid(0.0, "center_field", points=64)
        spec = spectrum(fid, zero_fill=1)
        with pytest.raises(ValueError, match="no spectrum bins"):
            extract_peak_phases(spec, [1e9], 1e-3)

    def test_phases_wrapped_to_half_open_interval(self):
        fid = three_line_fid(math.radians(90.0), "side_field", t2=0.2)
        spec = spectrum(fid, zero_fill=2)
        for p in extract_peak_phases(spec, [W0 - J, W0, W0 + J], J / 4):
            assert -math.pi < p.phase_rad <= math.pi


class TestFitDecay:
    def test_self_fit_recovers_time_constant(self):
        t = np.linspace(0.0, 0.5, 40)
        y = 2.0 * np.exp(-t / 0.1)
        fit = fit_decay(t, y)
        assert fit.t2_s == pytest.approx(0.1, rel=1e-2)
        assert fit.amplitude == pytest.approx(2.0, rel=1e-2)
        assert fit.nonexponentiality < 1.5

    def test_gaussian_decay_scores_nonexponential(self):
        t = np.linspace(0.0, 0.2, 40)
        y = np.exp(-((t / 0.08) ** 2))
        fit = fit_decay(t, y)
        assert fit.nonexponentiality > 1.0
        assert fit.beta > 1.5

    def test_degenerate_input_rejected(self):
        with pytest.raises(ValueError):
            fit_decay(np.linspace(0, 1, 10), np.zeros(10))

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            fit_decay(np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.5, 0.2]))


class TestTelegraphFactors:
    def test_conditional_matches_master_equation(self):
        from scipy.integrate import solve_ivp

        j, rate = 2 * np.pi * 17.0, 8.0

        def rhs(t, u):
            om, g = j / 2.0, rate / 2.0
            up = complex(u[0], u[1])
            dn = complex(u[2], u[3])
            dup = (-1j * om - g) * up + g * dn
            ddn = g * up + (1j * om - g) * dn
            return [dup.real, dup.imag, ddn.real, ddn.imag]

        t_end = 0.31
        sol = solve_ivp(rhs, (0.0, t_end), [1.0, 0.0, 0.0, 0.0], rtol=1e-11, atol=1e-13)
        ode = complex(sol.y[0, -1] + sol.y[2, -1], sol.y[1, -1] + sol.y[3, -1])
        formula = telegraph_conditional_factor(j, rate, np.array([t_end]))[0]
        assert formula == pytest.approx(ode, abs=1e-9)

    def test_stationary_is_mean_of_conditionals(self):
        t = np.linspace(0.0, 0.4, 50)
        j, rate = 2 * np.pi * 9.0, 11.0
        f = telegraph_conditional_factor(j, rate, t)
        stat = telegraph_coherence_factor(j, rate, t)
        assert np.max(np.abs(stat - 0.5 * (f + np.conj(f)).real)) < 1e-12

    def test_pair_factor_has_no_static_dephasing(self):
        # fast coupling, slow flips: the anti-aligned pair must not oscillate
        t = np.linspace(0.0, 0.05, 200)
        pair = antiphase_pair_factor(2 * np.pi * 38.4, 0.5, t)
        assert np.all(pair > 0.95)
