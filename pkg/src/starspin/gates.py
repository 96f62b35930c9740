"""Instantaneous rotations, virtual-Z frame tracking and the pseudo-CNOT.

Rotation conventions (angles in radians):

    R(phi, theta) = exp(-i theta (sigma_x cos phi + sigma_y sin phi) / 2)
    Z(theta)      = exp(-i theta sigma_z / 2)

``phi`` picks the rotation axis in the xy-plane measured from x, ``theta``
is the rotation angle.  Collective targets apply the same single-spin
rotation to every named spin.  Z rotations are usually tracked virtually:
a pending frame angle f on a spin turns a later R(phi, theta) into the
physical pulse R(phi - f, theta), and the pending Z is applied to the state
only once, when readout begins (receiver-frame alignment).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .core import (
    DensityMatrix,
    Operator,
    SIGMA_X,
    SIGMA_Y,
    SpinSystem,
    embed_matrices,
)
from .hamiltonian import build_hamiltonian, entangling_delay, phase_vector

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Rotation:
    """Collective rotation: same (phi, theta) on every target spin."""

    targets: tuple[str, ...]
    phi: float
    theta: float

    def __post_init__(self):
        if not self.targets:
            raise ValueError("rotation needs at least one target spin")
        if not (np.isfinite(self.phi) and np.isfinite(self.theta)):
            raise ValueError("rotation angles must be finite")


def single_spin_rotation(phi: float, theta: float) -> np.ndarray:
    axis = SIGMA_X * np.cos(phi) + SIGMA_Y * np.sin(phi)
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.eye(2, dtype=complex) * c - 1j * s * axis


def single_spin_z(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def rotation_unitary(rot: Rotation, system: SpinSystem) -> Operator:
    """Embedded product of identical single-spin rotations on the targets."""
    u2 = single_spin_rotation(rot.phi, rot.theta)
    op = embed_matrices(system, {name: u2 for name in rot.targets})
    op.unitary = True
    return op


def z_unitary(system: SpinSystem, targets: Iterable[str], theta: float) -> Operator:
    u2 = single_spin_z(theta)
    op = embed_matrices(system, {name: u2 for name in targets})
    op.unitary = True
    return op


@dataclass
class PhaseFrame:
    """Accumulated virtual-Z angle per spin, tracked mod 2*pi."""

    angles: dict[str, float] = field(default_factory=dict)

    def angle(self, spin: str) -> float:
        return self.angles.get(spin, 0.0)

    def advanced(self, targets: Iterable[str], theta: float) -> "PhaseFrame":
        new = dict(self.angles)
        for name in targets:
            new[name] = float(np.mod(new.get(name, 0.0) + theta + np.pi, TWO_PI) - np.pi)
        return PhaseFrame(new)

    def physical_phi(self, spin: str, phi: float) -> float:
        """Pulse phase to apply physically so that frame + pulse = Z(f) R(phi)."""
        return phi - self.angle(spin)


def virtual_z(frame: PhaseFrame, targets: Iterable[str], theta: float) -> PhaseFrame:
    """Advance the frame; no operator touches the state."""
    return frame.advanced(targets, theta)


def apply_unitary(rho: DensityMatrix, op: Operator | np.ndarray) -> DensityMatrix:
    """U rho U^dagger."""
    u = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)
    if u.shape != rho.matrix.shape:
        raise ValueError(f"dimension mismatch: operator {u.shape} vs state {rho.matrix.shape}")
    return DensityMatrix(u @ rho.matrix @ u.conj().T, rho.spins)


def apply_single_spin_unitary(m: np.ndarray, k: int, n_spins: int, u2: np.ndarray) -> np.ndarray:
    """Apply a 2x2 unitary on tensor factor ``k`` of a (2**n, 2**n) matrix.

    Costs O(dim**2) instead of the dense O(dim**3) conjugation, which keeps
    pulse application cheap on the large noisy registers.
    """
    dim = m.shape[0]
    left = 2**k
    right = dim // (2 * left)
    t = m.reshape(left, 2, right, left, 2, right)
    t = np.einsum("ab,LbRmcr,dc->LaRmdr", u2, t, u2.conj(), optimize=True)
    return np.ascontiguousarray(t.reshape(dim, dim))


def apply_rotation(rho: DensityMatrix, system: SpinSystem, targets: Iterable[str], phi: float, theta: float) -> DensityMatrix:
    """Fast in-register application of a collective rotation."""
    u2 = single_spin_rotation(phi, theta)
    m = rho.matrix
    for name in targets:
        m = apply_single_spin_unitary(m, system.index(name), system.n_spins, u2)
    return DensityMatrix(m, rho.spins)


def apply_z(rho: DensityMatrix, system: SpinSystem, targets: Iterable[str], theta: float) -> DensityMatrix:
    m = rho.matrix
    for name in targets:
        m = apply_single_spin_unitary(m, system.index(name), system.n_spins, single_spin_z(theta))
    return DensityMatrix(m, rho.spins)


def normalize_global_phase(m: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Rotate the matrix so its first element above ``tol`` is real positive."""
    flat = m.ravel()
    idx = np.flatnonzero(np.abs(flat) > tol)
    if idx.size == 0:
        return m.copy()
    return m * np.exp(-1j * np.angle(flat[idx[0]]))


def pseudo_cnot(system: SpinSystem, mode: str = "ideal") -> Operator:
    """CNOT-equivalent gate on (CC; CS1, CS2) composed from its primitives.

    The composition is

        exp(-i pi/4) Z_C(-pi/2) Z_S(-pi/2) R_S(0, pi/2) U_E R_S(pi/2, pi/2)

    where U_E is free evolution under the center-side ZZ couplings for the
    entangling delay.  Note that both xy-plane rotations act on the side
    spins (the flipped ones); the center spin only ever sees diagonal
    factors, which is what makes the result block-diagonal in the center.  In ``ideal`` mode the delay is exactly pi/J and the
    result is, up to global phase, the matrix with an identity upper block
    and an antidiagonal of i's in the lower block (a CNOT that flips both
    side spins when the center is |1>).  ``quantized`` mode uses the
    beat-period-aligned delay and is slightly imperfect.
    """
    chain = ("CC", "CS1", "CS2")
    for name in chain:
        system.index(name)
    t_e = entangling_delay(system, mode)
    # The gate is defined by the center-side couplings alone; anything else
    # the register carries belongs to the environment, not to this operator.
    chain_couplings = {
        k: j for k, j in system.couplings.items() if k[0] in chain and k[1] in chain
    }
    gate_system = SpinSystem(system.spins, chain_couplings, system.reference_frequency_hz)
    h = build_hamiltonian(gate_system, frame=None, warn_secular=False)
    u_e = np.diag(np.asarray(phase_vector(h, t_e)))

    r_s_pre = rotation_unitary(Rotation(("CS1", "CS2"), np.pi / 2.0, np.pi / 2.0), system).matrix
    r_s_post = rotation_unitary(Rotation(("CS1", "CS2"), 0.0, np.pi / 2.0), system).matrix
    z_s = z_unitary(system, ("CS1", "CS2"), -np.pi / 2.0).matrix
    z_c = z_unitary(system, ("CC",), -np.pi / 2.0).matrix

    u = np.exp(-1j * np.pi / 4.0) * z_c @ z_s @ r_s_post @ u_e @ r_s_pre
    return Operator(u, unitary=True)
