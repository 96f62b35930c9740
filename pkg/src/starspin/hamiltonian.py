"""Secular ZZ Hamiltonian in diagonal form, rotating frames, free propagators.

Because every term is built from sigma_z factors the Hamiltonian is diagonal
in the computational product basis, so evolution never needs a matrix
exponential: a vector of 2**n energies is the whole operator.  The dense
reconstruction exists for oracle tests only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import Operator, SpinSystem, z_signs

SECULARITY_FACTOR = 10.0


class SecularityWarning(UserWarning):
    """A coupled pair is too close in frequency for the ZZ-only form."""


@dataclass
class DiagonalHamiltonian:
    """Energies of the 2**n computational basis states, rad/s.

    ``frame_offsets`` records the per-spin rotating-frame frequency that was
    subtracted from each Larmor term when the energies were built.
    """

    energies: np.ndarray
    spins: tuple[str, ...]
    frame_offsets: np.ndarray

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        self.spins = tuple(self.spins)
        self.frame_offsets = np.asarray(self.frame_offsets, dtype=float)
        if self.energies.shape != (2 ** len(self.spins),):
            raise ValueError("energy vector length must be 2**n_spins")
        if self.frame_offsets.shape != (len(self.spins),):
            raise ValueError("need one frame offset per spin")

    @property
    def dim(self) -> int:
        return self.energies.size

    def dense(self) -> np.ndarray:
        return np.diag(self.energies.astype(complex))


def corotating_frame(system: SpinSystem) -> np.ndarray:
    """Offsets that put every spin on resonance; only couplings evolve."""
    return np.array([system.omega0(name) for name in system.names])


def detection_frame(system: SpinSystem, observe: str = "CC", offset_rads: float = 2.0 * np.pi * 100.0) -> np.ndarray:
    """Co-rotating frame except the observed spin, left at ``offset_rads``.

    The offset is where the observed multiplet lands on the frequency axis,
    so spectra are centered at a known, configurable position.
    """
    frame = corotating_frame(system)
    frame[system.index(observe)] -= offset_rads
    return frame


def build_hamiltonian(
    system: SpinSystem,
    frame: np.ndarray | None = None,
    *,
    warn_secular: bool = True,
) -> DiagonalHamiltonian:
    """Diagonal energies for the ZZ Hamiltonian of ``system`` in ``frame``.

    E(state) = sum_j (omega_j - frame_j) z_j / 2 + sum_{j<k} J_jk z_j z_k / 4
    with z = +-1 the sigma_z eigenvalues.  ``frame=None`` means the
    co-rotating frame (all Larmor terms removed).

    A SecularityWarning is emitted when a coupled pair has
    |omega_j - omega_k| < 10 J_jk in absolute (lab) frequencies, where the
    ZZ-only truncation becomes questionable.
    """
    n = system.n_spins
    omega = np.array([system.omega0(name) for name in system.names])
    if frame is None:
        frame = omega.copy()
    frame = np.asarray(frame, dtype=float)
    if frame.shape != (n,):
        raise ValueError(f"frame must have one offset per spin, got shape {frame.shape}")

    if warn_secular:
        for a, b, j in system.coupled_pairs():
            gap = abs(system.omega0(a) - system.omega0(b))
            if gap < SECULARITY_FACTOR * j:
                warnings.warn(
                    f"pair ({a},{b}): |delta omega| = {gap:.3g} rad/s is below "
                    f"{SECULARITY_FACTOR:g} * J = {SECULARITY_FACTOR * j:.3g} rad/s; "
                    "the ZZ-only coupling form is strained",
                    SecularityWarning,
                    stacklevel=2,
                )

    signs = z_signs(n)
    energies = ((omega - frame) / 2.0) @ signs
    for a, b, j in system.coupled_pairs():
        ia, ib = system.index(a), system.index(b)
        energies = energies + (j / 4.0) * signs[ia] * signs[ib]
    return DiagonalHamiltonian(energies, system.names, frame)


def free_propagator(h: DiagonalHamiltonian, t: float) -> Operator:
    """Diagonal unitary exp(-i E_a t)."""
    if t < 0:
        raise ValueError(f"evolution time must be non-negative, got {t}")
    return Operator(np.diag(np.exp(-1j * h.energies * t)), unitary=True)


def phase_vector(h: DiagonalHamiltonian, t: float) -> np.ndarray:
    """exp(-i E t) as a vector; rho evolves elementwise as p rho p*."""
    if t < 0:
        raise ValueError(f"evolution time must be non-negative, got {t}")
    return np.exp(-1j * h.energies * t)


def entangling_delay(system: SpinSystem, mode: str = "ideal") -> float:
    """Free-evolution time that turns the center-side ZZ coupling into the
    entangling half of the pseudo-CNOT.

    ``ideal`` returns pi/J exactly.  ``quantized`` rounds to an integer
    number of beat periods 2*pi/|delta omega| of the center-side chemical
    shift difference, which is what a phase-coherent spectrometer can wait
    for; the gate is then slightly over- or under-rotated.
    """
    j = system.j("CC", "CS1")
    if j <= 0:
        raise ValueError("system lacks a CC-CS1 coupling")
    t_ideal = np.pi / j
    if mode == "ideal":
        return t_ideal
    if mode == "quantized":
        delta = abs(system.omega0("CC") - system.omega0("CS1"))
        if delta == 0:
            raise ValueError("quantized mode needs distinct CC/CS shifts")
        beat = 2.0 * np.pi / delta
        n = max(1, round(t_ideal / beat))
        return n * beat
    raise ValueError(f"mode must be 'ideal' or 'quantized', got {mode!r}")
