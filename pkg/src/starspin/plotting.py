"""Figure rendering for the experiment reports.

Every figure is drawn from the exact numbers that land in the sidecar CSV
files and is written as a self-contained SVG next to them.  Spectra follow
the spectroscopy convention of frequency increasing to the left.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams["figure.dpi"] = 100
plt.rcParams["svg.hashsalt"] = "starspin"

_SAVE_KW = {"bbox_inches": "tight", "metadata": {"Date": None}}


def _finish(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def plot_spectrum_theory(panels, j_rads: float, omega0_rads: float, path: Path) -> Path:
    """One row per (label, freq_rads, complex bins) panel, real part shown."""
    fig, axes = plt.subplots(len(panels), 1, figsize=(6, 2.1 * len(panels)), sharex=True)
    if len(panels) == 1:
        axes = [axes]
    for ax, (label, freq, bins) in zip(axes, panels):
        x = (freq - omega0_rads) / j_rads
        ax.plot(x, bins.real, lw=1.0, color="tab:blue")
        ax.set_ylabel("signal (arb.)")
        ax.set_title(label, fontsize=9, loc="left")
        ax.axhline(0.0, color="0.8", lw=0.5, zorder=0)
        ax.set_xlim(2.5, -2.5)  # frequency grows to the left
    axes[-1].set_xlabel("(frequency - carrier) / J")
    return _finish(fig, path)


def plot_phase_sweep(rows, path: Path) -> Path:
    """rows: (sequence, theta_deg, peak_label, phase_deg, expected_deg)."""
    sequences = sorted({r[0] for r in rows})
    fig, axes = plt.subplots(1, len(sequences), figsize=(4.2 * len(sequences), 3.2), sharey=True)
    if len(sequences) == 1:
        axes = [axes]
    markers = {"left": "^", "center": "o", "right": "v"}
    for ax, seq in zip(axes, sequences):
        for peak in ("left", "center", "right"):
            pts = [(r[1], r[3], r[4]) for r in rows if r[0] == seq and r[2] == peak]
            if not pts:
                continue
            theta, got, want = (np.array(v) for v in zip(*pts))
            order = np.argsort(theta)
            ax.plot(theta[order], want[order], "-", color="0.75", lw=1.0, zorder=1)
            ax.plot(theta[order], got[order], markers[peak], ms=5, label=peak, zorder=2)
        ax.set_title(seq, fontsize=10)
        ax.set_xlabel("applied phase (deg)")
    axes[0].set_ylabel("extracted peak phase (deg)")
    axes[0].legend(fontsize=8, frameon=False)
    return _finish(fig, path)


def plot_noise_decay(curves, fits, path: Path) -> Path:
    """curves: {variant: (tau_ms, amplitude)}, fits: {variant: (amp, t2_ms)}."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    colors = {"full": "tab:green", "selective": "tab:red", "xy8": "tab:blue"}
    for variant, (tau, amp) in curves.items():
        c = colors.get(variant, "k")
        ax.plot(tau, amp, "o", ms=4, color=c, label=variant)
        if variant in fits:
            a0, t2_ms = fits[variant]
            tt = np.linspace(min(tau), max(tau), 200)
            ax.plot(tt, a0 * np.exp(-tt / t2_ms), "--", lw=1.0, color=c, alpha=0.7)
    ax.set_xlabel("sensing time (ms)")
    ax.set_ylabel("signal amplitude (arb.)")
    ax.set_ylim(bottom=0)
    ax.legend(fontsize=8, frameon=False)
    return _finish(fig, path)


def plot_fid_grid(panels, path: Path) -> Path:
    """panels: (row_label, col_label, t_s, re, im, overlay or None)."""
    rows = sorted({p[0] for p in panels})
    cols = sorted({p[1] for p in panels})
    fig, axes = plt.subplots(
        len(rows), len(cols), figsize=(4.0 * len(cols), 1.9 * len(rows)), sharex="col", squeeze=False
    )
    for r_label, c_label, t, re, im, overlay in panels:
        ax = axes[rows.index(r_label)][cols.index(c_label)]
        ax.plot(t * 1e3, re, color="tab:red", lw=0.9, label="re")
        ax.plot(t * 1e3, im, color="0.2", lw=0.9, label="im")
        if overlay is not None:
            ax.plot(t * 1e3, overlay, color="tab:green", lw=1.0, ls="--", label="model")
        ax.set_ylabel(r_label, fontsize=8)
        if rows.index(r_label) == 0:
            ax.set_title(c_label, fontsize=9)
    for ax in axes[-1]:
        ax.set_xlabel("time (ms)")
    axes[0][0].legend(fontsize=7, frameon=False)
    return _finish(fig, path)


def plot_spectrum(spec_freq, spec_bins, omega0_rads: float, j_rads: float, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5.6, 3.0))
    x = (spec_freq - omega0_rads) / (2.0 * np.pi)
    ax.plot(x, spec_bins.real, lw=0.9, color="tab:blue", label="re")
    ax.plot(x, np.abs(spec_bins), lw=0.7, color="0.6", alpha=0.6, label="abs")
    span = 2.5 * j_rads / (2.0 * np.pi)
    ax.set_xlim(span, -span)
    ax.set_xlabel("frequency - carrier (Hz)")
    ax.set_ylabel("signal (arb.)")
    ax.legend(fontsize=8, frameon=False)
    return _finish(fig, path)
