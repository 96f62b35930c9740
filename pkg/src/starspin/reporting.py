"""Deterministic CSV writers for the canonical output tables.

Floats are rendered with ``repr`` (shortest round-trip form), so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .acquisition import Fid, Spectrum, SpectrumPeak


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_fid_csv(path: Path, fid: Fid) -> Path:
    rows = ((t, s.real, s.imag) for t, s in zip(fid.times, fid.samples))
    return write_csv(path, ("t_s", "re", "im"), rows)


def write_spectrum_csv(path: Path, spec: Spectrum) -> Path:
    ppm = spec.ppm if spec.ppm is not None else np.full_like(spec.freq_rads, np.nan)
    rows = (
        (f, p, b.real, b.imag, abs(b))
        for f, p, b in zip(spec.freq_rads, ppm, spec.bins)
    )
    return write_csv(path, ("freq_rads", "ppm", "re", "im", "abs"), rows)


def write_peaks_csv(path: Path, peaks: Sequence[SpectrumPeak], ppm_of) -> Path:
    rows = (
        (ppm_of(p.center_rads), float(np.degrees(p.phase_rad)), p.amplitude)
        for p in peaks
    )
    return write_csv(path, ("center_ppm", "phase_deg", "amplitude"), rows)
