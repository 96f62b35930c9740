"""The four reproducible experiment families and the raw-program runner.

Each run writes its plotted numbers to CSV (the authoritative output) and a
matplotlib-rendered SVG next to them.  Everything is deterministic: no RNG
enters any code path, so identical configurations produce byte-identical
CSV files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import plotting
from .acquisition import (
    SignalModelParams,
    SpectrumPeak,
    analytic_signal,
    antiphase_pair_factor,
    extract_peak_phases,
    fit_decay,
    Fid,
    spectrum,
    telegraph_coherence_factor,
)
from .core import SpinSystem
from .hamiltonian import entangling_delay
from .noise import DecouplingMode, SampleSpec
from .pulseprog import PulseProgram, builtin_sequence
from .reporting import write_csv, write_fid_csv, write_peaks_csv, write_spectrum_csv
from .runner import execute_program

PEAK_LABELS = ("left", "center", "right")  # frequency decreasing, spectroscopy order


@dataclass
class ExperimentConfig:
    """Shared wiring for all experiment families."""

    molecule: SpinSystem
    out_dir: Path
    detect_offset_hz: float = 100.0
    points: int = 4096
    dwell_ms: float = 1.0
    zero_fill: int = 2
    max_step_ms: float = 0.5
    validate_every: int = 10
    cnot_mode: str = "ideal"

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)

    @property
    def detect_offset_rads(self) -> float:
        return 2.0 * math.pi * self.detect_offset_hz

    @property
    def dwell_s(self) -> float:
        return self.dwell_ms * 1e-3

    @property
    def j_rads(self) -> float:
        return self.molecule.j("CC", "CS1")

    @property
    def t_entangle_s(self) -> float:
        return entangling_delay(self.molecule, self.cnot_mode)

    def peak_centers(self) -> list[float]:
        w0 = self.detect_offset_rads
        return [w0 - self.j_rads, w0, self.j_rads + w0]

    def ppm_axis(self) -> tuple[float, float, float]:
        return (
            self.molecule.spin("CC").shift_ppm,
            self.detect_offset_rads,
            self.molecule.reference_frequency_hz,
        )

    def ppm_of(self, freq_rads: float) -> float:
        ppm_obs, offset, ref = self.ppm_axis()
        return ppm_obs + (freq_rads - offset) / (2.0 * math.pi * ref * 1e-6)

    def execute(self, program: PulseProgram, **kwargs):
        kwargs.setdefault("detect_offset_rads", self.detect_offset_rads)
        kwargs.setdefault("max_step_s", self.max_step_ms * 1e-3)
        kwargs.setdefault("validate_every", self.validate_every)
        return execute_program(program, self.molecule, **kwargs)

    def spectrum_of(self, fid: Fid):
        return spectrum(fid, zero_fill=self.zero_fill, ppm_axis=self.ppm_axis())


def _labeled_peaks(peaks: list[SpectrumPeak]) -> list[tuple[str, SpectrumPeak]]:
    ordered = sorted(peaks, key=lambda p: -p.center_rads)
    return list(zip(PEAK_LABELS, ordered))


def _signal_amplitude(peaks: list[SpectrumPeak]) -> float:
    return float(sum(p.amplitude for p in peaks))


# ---------------------------------------------------------------------------
# spectrum-theory


def run_spectrum_theory(
    cfg: ExperimentConfig,
    thetas_deg: list[float] = (0.0, 50.0),
    jt2: float = 22.0,
) -> dict:
    """Closed-form three-peak spectra for both field placements.

    Evaluates the analytic signal models with J T2 fixed (default 22) over
    the requested phases and Fourier-transforms them.
    """
    j = cfg.j_rads
    w0 = cfg.detect_offset_rads
    t = np.arange(cfg.points) * cfg.dwell_s
    panels = []
    rows = []
    peak_rows = []
    for theta_deg in thetas_deg:
        theta = math.radians(theta_deg)
        params = SignalModelParams(theta, j, w0, jt2 / j)
        for kind in ("center_field", "side_field"):
            sig = analytic_signal(params, kind, t, convention="quadrature")
            spec = cfg.spectrum_of(Fid(sig, cfg.dwell_s))
            label = f"{kind} theta={theta_deg:g}"
            panels.append((label, spec.freq_rads, spec.bins))
            rows += [
                (kind, theta_deg, f, b.real, b.imag, abs(b))
                for f, b in zip(spec.freq_rads, spec.bins)
            ]
            for name, p in _labeled_peaks(extract_peak_phases(spec, cfg.peak_centers(), j / 4.0)):
                peak_rows.append((kind, theta_deg, name, cfg.ppm_of(p.center_rads),
                                  math.degrees(p.phase_rad), p.amplitude))
    csv_path = write_csv(
        cfg.out_dir / "spectrum_theory.csv",
        ("kind", "theta_deg", "freq_rads", "re", "im", "abs"),
        rows,
    )
    peaks_path = write_csv(
        cfg.out_dir / "spectrum_theory_peaks.csv",
        ("kind", "theta_deg", "peak", "center_ppm", "phase_deg", "amplitude"),
        peak_rows,
    )
    fig_path = plotting.plot_spectrum_theory(panels, j, w0, cfg.out_dir / "spectrum_theory.svg")
    return {"csv": csv_path, "peaks": peaks_path, "figure": fig_path, "peak_rows": peak_rows}


# ---------------------------------------------------------------------------
# phase-sweep


def expected_peak_phases(sequence: str, theta_deg: float) -> dict[str, float]:
    if sequence == "field_on_cc":
        return {name: theta_deg for name in PEAK_LABELS}
    return {"left": 2.0 * theta_deg, "center": 0.0, "right": -2.0 * theta_deg}


def run_phase_sweep(
    cfg: ExperimentConfig,
    sample: SampleSpec,
    thetas_deg: list[float] = (0.0, 30.0, 50.0, 90.0),
    tau_ms: float = 3.4,
    sequences: tuple[str, ...] = ("field_on_cc", "field_on_cs"),
) -> dict:
    """Full pipeline phase readout versus applied phase, fully decoupled."""
    j = cfg.j_rads
    phase_rows = []
    spec_rows = []
    for sequence in sequences:
        for theta_deg in thetas_deg:
            prog = builtin_sequence(
                sequence,
                t_entangle_s=cfg.t_entangle_s,
                theta=math.radians(theta_deg),
                tau_s=tau_ms * 1e-3,
                points=cfg.points,
                dwell_s=cfg.dwell_s,
            )
            res = cfg.execute(prog, sample=sample, decoupling=DecouplingMode.FULL)
            spec = cfg.spectrum_of(res.fid)
            expected = expected_peak_phases(sequence, theta_deg)
            for name, p in _labeled_peaks(extract_peak_phases(spec, cfg.peak_centers(), j / 4.0)):
                phase_rows.append(
                    (
                        sequence,
                        theta_deg,
                        name,
                        cfg.ppm_of(p.center_rads),
                        math.degrees(p.phase_rad),
                        expected[name],
                        p.amplitude,
                    )
                )
            spec_rows += [
                (sequence, theta_deg, f, pp, b.real, b.imag, abs(b))
                for f, pp, b in zip(spec.freq_rads, spec.ppm, spec.bins)
            ]
    csv_path = write_csv(
        cfg.out_dir / "phase_sweep_phases.csv",
        ("sequence", "theta_deg", "peak", "center_ppm", "phase_deg", "expected_deg", "amplitude"),
        phase_rows,
    )
    spectra_path = write_csv(
        cfg.out_dir / "phase_sweep_spectra.csv",
        ("sequence", "theta_deg", "freq_rads", "ppm", "re", "im", "abs"),
        spec_rows,
    )
    fig_rows = [(r[0], r[1], r[2], r[4], r[5]) for r in phase_rows]
    fig_path = plotting.plot_phase_sweep(fig_rows, cfg.out_dir / "phase_sweep.svg")
    return {"csv": csv_path, "spectra": spectra_path, "figure": fig_path, "phase_rows": phase_rows}


# ---------------------------------------------------------------------------
# noise-decay


NOISE_DECAY_VARIANTS = ("full", "selective", "xy8")


def run_noise_decay(
    cfg: ExperimentConfig,
    sample: SampleSpec,
    n_values: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 8, 10, 12, 14),
    tau_unit_ms: float = 3.44,
    theta_deg: float = 0.0,
    variants: tuple[str, ...] = NOISE_DECAY_VARIANTS,
    points: int | None = None,
) -> dict:
    """Signal amplitude versus sensing time in three controlled environments.

    full       sensing window fully decoupled (quietest environment)
    selective  side protons active during the sensing window
    xy8        like selective, with an XY-8 train on all carbons

    The sensor is exposed to the chosen environment only during the sensing
    window; entangling blocks and acquisition always run fully decoupled.
    Emits the amplitude curves plus exponential and stretched-exponential
    fits with the non-exponentiality score.
    """
    points = points or min(cfg.points, 512)
    theta = math.radians(theta_deg)
    curve_rows = []
    curves: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for variant in variants:
        taus = []
        amps = []
        for n in n_values:
            tau_s = tau_unit_ms * 1e-3 * n
            if variant == "xy8":
                prog = builtin_sequence(
                    "xy8_sense",
                    t_entangle_s=cfg.t_entangle_s,
                    theta=theta,
                    cycle_s=tau_unit_ms * 1e-3,
                    cycles=n,
                    points=points,
                    dwell_s=cfg.dwell_s,
                    sense_decouple=DecouplingMode.SELECTIVE,
                )
            else:
                sense = DecouplingMode.FULL if variant == "full" else DecouplingMode.SELECTIVE
                prog = builtin_sequence(
                    "field_on_cs",
                    t_entangle_s=cfg.t_entangle_s,
                    theta=theta,
                    tau_s=tau_s,
                    points=points,
                    dwell_s=cfg.dwell_s,
                    sense_decouple=sense,
                )
            res = cfg.execute(prog, sample=sample)
            spec = cfg.spectrum_of(res.fid)
            peaks = extract_peak_phases(spec, cfg.peak_centers(), cfg.j_rads / 4.0, deconvolve=False)
            amp = _signal_amplitude(peaks)
            taus.append(tau_s)
            amps.append(amp)
            curve_rows.append((variant, n, tau_s * 1e3, amp))
        curves[variant] = (np.array(taus) * 1e3, np.array(amps))

    fit_rows = []
    fits = {}
    decay_fits = {}
    for variant, (tau_ms_arr, amps) in curves.items():
        if tau_ms_arr.size < 4:
            continue
        f = fit_decay(tau_ms_arr * 1e-3, amps)
        decay_fits[variant] = f
        fits[variant] = (f.amplitude, f.t2_s * 1e3)
        fit_rows.append(
            (
                variant,
                f.amplitude,
                f.t2_s * 1e3,
                f.rss_exponential,
                f.stretched_amplitude,
                f.stretched_t2_s * 1e3,
                f.beta,
                f.rss_stretched,
                f.nonexponentiality,
            )
        )
    csv_path = write_csv(
        cfg.out_dir / "noise_decay.csv",
        ("variant", "n", "tau_ms", "amplitude"),
        curve_rows,
    )
    fits_path = write_csv(
        cfg.out_dir / "noise_decay_fits.csv",
        (
            "variant",
            "exp_amplitude",
            "exp_t2_ms",
            "exp_rss",
            "stretched_amplitude",
            "stretched_t2_ms",
            "stretched_beta",
            "stretched_rss",
            "nonexponentiality",
        ),
        fit_rows,
    )
    fig_path = plotting.plot_noise_decay(curves, fits, cfg.out_dir / "noise_decay.svg")
    return {
        "csv": csv_path,
        "fits": fits_path,
        "figure": fig_path,
        "curves": curves,
        "decay_fits": decay_fits,
    }


# ---------------------------------------------------------------------------
# fid-appendix


def fid_model_curve(cfg: ExperimentConfig, sample: SampleSpec, mode: DecouplingMode, t: np.ndarray) -> np.ndarray:
    """Closed-form envelope for the prepared-state FID.

    Product of the center spin's own coherence decay, the anti-aligned side
    pair's flip factor, and (selective mode) one stationary telegraph factor
    per side proton.
    """
    g_c = 1.0 / sample.t1_cc_s
    g_h = 1.0 / sample.t1_hss_s
    out = np.exp(-0.5 * g_c * t) * antiphase_pair_factor(cfg.j_rads, g_c, t)
    if mode is DecouplingMode.SELECTIVE:
        j_ch = cfg.molecule.j("CC", "HS1")
        n_hs = sum(1 for n in cfg.molecule.names if n.startswith("HS"))
        out = out * telegraph_coherence_factor(j_ch, g_h, t) ** n_hs
    return out


def run_fid_appendix(
    cfg: ExperimentConfig,
    samples: list[SampleSpec],
    modes: tuple[str, ...] = ("full", "selective"),
    points: int | None = None,
) -> dict:
    """Direct FIDs of the prepared state for each sample and decoupling mode.

    Full-decoupling traces come with exponential fits, selective ones with
    the closed-form telegraph-product model curve.
    """
    points = points or min(cfg.points, 2048)
    from .pulseprog import Acquire

    prog = PulseProgram((Acquire(points, cfg.dwell_s),))
    trace_rows = []
    fit_rows = []
    panels = []
    results = {}
    for sample in samples:
        for mode_name in modes:
            mode = DecouplingMode.parse(mode_name)
            res = cfg.execute(prog, sample=sample, decoupling=mode, init="rho_i", detect_offset_rads=0.0)
            t = res.fid.times
            sig = res.fid.samples
            fit = fit_decay(t, np.abs(sig))
            model = (
                fit.amplitude * np.exp(-t / fit.t2_s)
                if mode is DecouplingMode.FULL
                else fid_model_curve(cfg, sample, mode, t)
            )
            trace_rows += [
                (sample.name, mode.value, ts, s.real, s.imag, m)
                for ts, s, m in zip(t, sig, model)
            ]
            fit_rows.append(
                (
                    sample.name,
                    mode.value,
                    fit.t2_s * 1e3,
                    fit.beta,
                    fit.nonexponentiality,
                )
            )
            panels.append((sample.name, mode.value, t, sig.real, sig.imag, model))
            results[(sample.name, mode.value)] = fit
    csv_path = write_csv(
        cfg.out_dir / "fid_appendix.csv",
        ("sample", "mode", "t_s", "re", "im", "model"),
        trace_rows,
    )
    fits_path = write_csv(
        cfg.out_dir / "fid_appendix_fits.csv",
        ("sample", "mode", "exp_t2_ms", "stretched_beta", "nonexponentiality"),
        fit_rows,
    )
    fig_path = plotting.plot_fid_grid(panels, cfg.out_dir / "fid_appendix.svg")
    return {"csv": csv_path, "fits": fits_path, "figure": fig_path, "decay_fits": results}


# ---------------------------------------------------------------------------
# raw program runner


def run_program(
    cfg: ExperimentConfig,
    program: PulseProgram,
    *,
    sample: SampleSpec | None = None,
    decoupling: DecouplingMode | str = DecouplingMode.FULL,
    init: str = "thermal",
) -> dict:
    """Execute a user program and emit the canonical FID/spectrum/peak files."""
    res = cfg.execute(program, sample=sample, decoupling=decoupling, init=init)
    spec = cfg.spectrum_of(res.fid)
    peaks = extract_peak_phases(spec, cfg.peak_centers(), cfg.j_rads / 4.0)
    fid_path = write_fid_csv(cfg.out_dir / "fid.csv", res.fid)
    spec_path = write_spectrum_csv(cfg.out_dir / "spectrum.csv", spec)
    peaks_path = write_peaks_csv(cfg.out_dir / "peaks.csv", peaks, cfg.ppm_of)
    fig_path = plotting.plot_spectrum(
        spec.freq_rads, spec.bins, cfg.detect_offset_rads, cfg.j_rads, cfg.out_dir / "spectrum.svg"
    )
    return {
        "fid": fid_path,
        "spectrum": spec_path,
        "peaks": peaks_path,
        "figure": fig_path,
        "result": res,
    }
