"""Markovian flip-flop noise, decoupling registers and the split-step evolver.

Each noisy spin carries an infinite-temperature flip-flop channel: jump
operators sigma_+ and sigma_- at equal rates Gamma/2.  Over a step dt the
single-spin channel has the exact closed form

    coherences        *= u            with u = exp(-Gamma dt / 2)
    population excess *= u**2

equivalently a random-Pauli Kraus set {sqrt(a0) I, sqrt(ax) X, sqrt(ay) Y,
sqrt(az) Z} with a0 = (1+u)^2/4, ax = ay = (1-u^2)/4, az = (1-u)^2/4.  The
evolver interleaves that exact channel with the exact diagonal unitary in a
symmetric (Strang) split, so the only integration error is the second-order
splitting error.  The 4**n superoperator is never materialized on the fast
path; a dense Liouvillian builder is provided purely as a small-system
oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Mapping

import numpy as np

from .core import DensityMatrix, SpinSystem
from .hamiltonian import DiagonalHamiltonian

MAX_RATE_DT = 0.05


class StepSizeError(ValueError):
    """dt * max(rate) exceeded the accuracy guard."""


class DecouplingMode(str, Enum):
    NONE = "none"
    SELECTIVE = "selective"
    FULL = "full"

    @classmethod
    def parse(cls, value: "DecouplingMode | str") -> "DecouplingMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ValueError(
                f"decoupling mode must be one of {[m.value for m in cls]}, got {value!r}"
            ) from None


@dataclass(frozen=True)
class SampleSpec:
    """Measured relaxation constants of one impurity-doped sample."""

    name: str
    concentration_mM: float
    t1_cc_s: float
    t2_full_s: float
    t2_selective_s: float
    t1_hss_s: float

    def __post_init__(self):
        for fname in ("concentration_mM", "t1_cc_s", "t2_full_s", "t2_selective_s", "t1_hss_s"):
            if getattr(self, fname) <= 0:
                raise ValueError(f"{fname} must be positive")

    def with_concentration(self, concentration_mM: float) -> "SampleSpec":
        """Scale every rate linearly with the impurity concentration."""
        if concentration_mM <= 0:
            raise ValueError("concentration must be positive")
        f = self.concentration_mM / concentration_mM
        return replace(
            self,
            name=f"{self.name}@{concentration_mM:g}mM",
            concentration_mM=concentration_mM,
            t1_cc_s=self.t1_cc_s * f,
            t2_full_s=self.t2_full_s * f,
            t2_selective_s=self.t2_selective_s * f,
            t1_hss_s=self.t1_hss_s * f,
        )


@dataclass(frozen=True)
class NoiseSpec:
    """Per-spin flip-flop rates (1/s) plus the decoupling mode they assume."""

    rates: Mapping[str, float]
    decoupling: DecouplingMode = DecouplingMode.NONE

    def __post_init__(self):
        rates = dict(self.rates)
        for name, g in rates.items():
            if g < 0:
                raise ValueError(f"negative rate for {name}: {g}")
        object.__setattr__(self, "rates", rates)

    def rate(self, spin: str) -> float:
        return self.rates.get(spin, 0.0)

    @property
    def max_rate(self) -> float:
        return max(self.rates.values(), default=0.0)


def apply_decoupling(system: SpinSystem, mode: DecouplingMode | str) -> SpinSystem:
    """Shrink the register according to the decoupling mode.

    full      -> carbon chain only (all H spins nullified)
    selective -> drop the H attached to the center carbon, keep the side H's
    none      -> untouched
    """
    mode = DecouplingMode.parse(mode)
    if mode is DecouplingMode.NONE:
        return system
    if mode is DecouplingMode.SELECTIVE:
        keep = [n for n in system.names if n != "HC"]
        return system.subset(keep)
    keep = [n for n in system.names if not n.startswith("H")]
    return system.subset(keep)


def calibrate_rates(
    sample: SampleSpec,
    system: SpinSystem,
    decoupling: DecouplingMode | str = DecouplingMode.NONE,
) -> NoiseSpec:
    """Flip-flop rates from the sample's measured T1 constants.

    Side H's flip at 1/T1(HSs); HC sits in the same chemical environment
    class and gets the same rate.  Carbons couple to the impurities directly
    but weakly: each carbon gets 1/T1(CC).  All rates scale linearly with
    the impurity concentration by construction of SampleSpec.
    """
    gamma_h = 1.0 / sample.t1_hss_s
    gamma_c = 1.0 / sample.t1_cc_s
    rates = {}
    for spin in system.spins:
        rates[spin.name] = gamma_h if spin.name.startswith("H") else gamma_c
    return NoiseSpec(rates, DecouplingMode.parse(decoupling))


@dataclass(frozen=True)
class FlipFlopChannel:
    """Single-spin infinite-temperature flip-flop dissipator."""

    spin: str
    rate: float

    def jump_operators(self) -> list[tuple[np.ndarray, float]]:
        """(operator, rate) pairs: raising and lowering, each at rate/2."""
        sp = np.array([[0, 1], [0, 0]], dtype=complex)
        return [(sp, self.rate / 2.0), (sp.T.conj(), self.rate / 2.0)]

    def kraus(self, dt: float) -> list[np.ndarray]:
        u = float(np.exp(-0.5 * self.rate * dt))
        a0 = (1.0 + u) ** 2 / 4.0
        ax = ay = (1.0 - u * u) / 4.0
        az = (1.0 - u) ** 2 / 4.0
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
        sz = np.array([[1, 0], [0, -1]], dtype=complex)
        return [
            np.sqrt(a0) * np.eye(2, dtype=complex),
            np.sqrt(ax) * sx,
            np.sqrt(ay) * sy,
            np.sqrt(az) * sz,
        ]


def _apply_flipflop(m: np.ndarray, left: int, right: int, u: float, scratch: np.ndarray | None = None) -> None:
    """Exact single-spin channel, in place, on the (left, 2, right)-factored state."""
    v = m.reshape(left, 2, right, left, 2, right)
    v[:, 0, :, :, 1, :] *= u
    v[:, 1, :, :, 0, :] *= u
    d0 = v[:, 0, :, :, 0, :]
    d1 = v[:, 1, :, :, 1, :]
    # population mixing via the conserved sum: d0 -= s*(d0-d1), d1 += s*(d0-d1)
    s = 0.5 * (1.0 - u * u)
    if scratch is None:
        t = np.subtract(d0, d1)
    else:
        t = scratch[: d0.size].reshape(d0.shape)
        np.subtract(d0, d1, out=t)
    t *= s
    d0 -= t
    d1 += t


class StepPlan:
    """Precomputed one-step propagator pieces for a fixed (H, noise, dt).

    Caches the elementwise half-step phase matrix and the per-spin channel
    factors so tight loops (FID sampling) pay no setup cost per step.
    """

    def __init__(self, h: DiagonalHamiltonian, noise: "NoiseSpec | None", dt: float):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        max_rate = noise.max_rate if noise is not None else 0.0
        if dt * max_rate > MAX_RATE_DT:
            raise StepSizeError(
                f"dt * max(rate) = {dt * max_rate:.3g} exceeds the guard {MAX_RATE_DT}; "
                f"use dt <= {MAX_RATE_DT / max_rate:.3g} s"
            )
        self.h = h
        self.dt = dt
        dim = h.dim
        p_half = np.exp(-1j * h.energies * dt / 2.0)
        self.phase = np.outer(p_half, p_half.conj())
        self.channels: list[tuple[int, int, float]] = []
        if noise is not None:
            for k, name in enumerate(h.spins):
                g = noise.rate(name)
                if g > 0.0:
                    self.channels.append(
                        (2**k, dim // 2 ** (k + 1), float(np.exp(-0.5 * g * dt)))
                    )
        self._scratch = np.empty(dim * dim // 4, dtype=complex) if self.channels else None

    def step(self, m: np.ndarray) -> None:
        m *= self.phase
        for left, right, u in self.channels:
            _apply_flipflop(m, left, right, u, self._scratch)
        m *= self.phase


class ValidityMonitor:
    """Counts and enforces per-step state validity checks."""

    def __init__(self, every: int = 10, trace_tol: float = 1e-10, herm_tol: float = 1e-10):
        self.every = every
        self.trace_tol = trace_tol
        self.herm_tol = herm_tol
        self.checks = 0

    def check(self, state: DensityMatrix) -> None:
        self.checks += 1
        state.validate(trace_tol=self.trace_tol, herm_tol=self.herm_tol)


def evolve(
    rho: DensityMatrix,
    h: DiagonalHamiltonian,
    noise: NoiseSpec | None,
    dt: float,
    steps: int,
    *,
    callback: Callable[[int, DensityMatrix], None] | None = None,
    monitor: ValidityMonitor | None = None,
) -> DensityMatrix:
    """Propagate ``rho`` for ``steps`` steps of ``dt`` under H plus noise.

    Each step is a symmetric split: half-step diagonal phase, exact per-spin
    flip-flop channels over the full dt, half-step diagonal phase.  The
    callback, if given, sees the state after every step (step index is
    1-based); the monitor validates every ``monitor.every``-th step.
    """
    if tuple(rho.spins) != tuple(h.spins):
        raise ValueError(f"state register {rho.spins} does not match Hamiltonian {h.spins}")
    plan = StepPlan(h, noise, dt)
    m = rho.matrix.copy()
    out = DensityMatrix(m, rho.spins)
    for step in range(1, steps + 1):
        plan.step(m)
        if callback is not None:
            callback(step, out)
        if monitor is not None and step % monitor.every == 0:
            monitor.check(out)
    return out


def evolve_trajectory(
    rho: DensityMatrix,
    h: DiagonalHamiltonian,
    noise: NoiseSpec | None,
    dt: float,
    steps: int,
) -> list[DensityMatrix]:
    """Like evolve, but returns [rho(0), rho(dt), ..., rho(steps*dt)]."""
    states = [rho.copy()]

    def grab(_step: int, state: DensityMatrix) -> None:
        states.append(state.copy())

    evolve(rho, h, noise, dt, steps, callback=grab)
    return states


def dense_liouvillian(h: DiagonalHamiltonian, noise: NoiseSpec | None) -> np.ndarray:
    """Dense (dim**2, dim**2) generator for row-major vectorized states.

    Test oracle only; refuses registers above 3 spins.  Uses
    vec(A rho B) = (A kron B^T) vec(rho) with C-order flattening.
    """
    n = len(h.spins)
    if n > 3:
        raise ValueError("dense Liouvillian is an oracle for n <= 3 spins only")
    dim = h.dim
    eye = np.eye(dim)
    hm = h.dense()
    lio = -1j * (np.kron(hm, eye) - np.kron(eye, hm.T))
    if noise is not None:
        sp = np.array([[0, 1], [0, 0]], dtype=complex)
        sm = sp.T.conj()
        for k, name in enumerate(h.spins):
            g = noise.rate(name)
            if g <= 0.0:
                continue
            for jump2 in (sp, sm):
                op = np.ones((1, 1), dtype=complex)
                for i in range(n):
                    op = np.kron(op, jump2 if i == k else np.eye(2, dtype=complex))
                opd_op = op.conj().T @ op
                lio += (g / 2.0) * (
                    np.kron(op, op.conj())
                    - 0.5 * (np.kron(opd_op, eye) + np.kron(eye, opd_op.T))
                )
    return lio
