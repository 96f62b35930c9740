"""Pulse-program interpreter: wires the DSL to states, gates and noise.

Programs execute in the co-rotating frame (every spin on resonance, only
couplings evolve), which is where the sequence algebra is exact.  Detection
happens in a receiver frame that leaves the observed spin at a configurable
offset, so its multiplet lands at a known place on the frequency axis.
Virtual-Z bookkeeping follows the expanded program: pulse phases arrive
pre-shifted and the residual frame is applied to the state once, immediately
before acquisition (receiver-phase alignment), which makes the interpreter
agree exactly with literal Z rotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .acquisition import Fid, acquire_fid
from .core import (
    DensityMatrix,
    SpinSystem,
    prepare_rho_i,
    renormalized_thermal_state,
    thermal_state,
)
from .gates import apply_rotation, apply_z
from .hamiltonian import (
    build_hamiltonian,
    corotating_frame,
    detection_frame,
    phase_vector,
)
from .noise import (
    MAX_RATE_DT,
    DecouplingMode,
    NoiseSpec,
    SampleSpec,
    ValidityMonitor,
    apply_decoupling,
    calibrate_rates,
    evolve,
)
from .pulseprog import Acquire, Decouple, Delay, Pulse, PulseProgram, VirtualZ, expand

DEFAULT_DETECT_OFFSET_RADS = 2.0 * np.pi * 100.0
DEFAULT_MAX_STEP_S = 5e-4

INITIAL_STATES = ("thermal", "rho_i", "mixed")


@dataclass
class ExecutionResult:
    final_state: DensityMatrix
    fid: Fid | None
    system: SpinSystem
    noise: NoiseSpec | None
    duration_s: float
    validity_checks: int


def resolve_targets(token: str, system: SpinSystem) -> tuple[str, ...]:
    """Map a DSL target token to register spin labels."""
    sides = tuple(n for n in system.names if n.startswith("CS"))
    if token == "CC":
        return ("CC",)
    if token == "CS":
        if not sides:
            raise KeyError("register has no side carbons for target CS")
        return sides
    if token == "ALL":
        return ("CC",) + sides
    raise KeyError(f"unknown pulse target {token!r}")


def initial_state(system: SpinSystem, kind: str = "thermal") -> DensityMatrix:
    """Named initial states: 'thermal' is the renormalized readout form,
    'rho_i' the zero-quantum prepared state, 'mixed' the identity state."""
    if kind == "thermal":
        return renormalized_thermal_state(system)
    if kind == "rho_i":
        return prepare_rho_i(system)
    if kind == "mixed":
        return DensityMatrix(np.eye(system.dim, dtype=complex) / system.dim, system.names)
    raise ValueError(f"initial state must be one of {INITIAL_STATES}, got {kind!r}")


def _decouple_modes(program: PulseProgram) -> list[DecouplingMode]:
    modes = []

    def walk(events):
        for ev in events:
            if isinstance(ev, Decouple):
                modes.append(ev.mode)
            elif hasattr(ev, "body"):
                walk(ev.body)

    walk(program.events)
    return modes


_MODE_RANK = {DecouplingMode.NONE: 0, DecouplingMode.SELECTIVE: 1, DecouplingMode.FULL: 2}


class _Run:
    """Mutable execution context for one program run.

    The register is sized once, by the least decoupled mode the program ever
    uses; ``decouple`` events then gate spins on and off, zeroing the
    couplings and flip rates of currently decoupled spins.  A gated-off spin
    sits fully mixed and uncoupled, which is exactly what decoupler
    irradiation leaves behind, so toggling in either direction is sound.
    """

    def __init__(
        self,
        molecule: SpinSystem,
        register_mode: DecouplingMode,
        start_mode: DecouplingMode,
        sample: SampleSpec | None,
        observe: str,
        detect_offset_rads: float,
        max_step_s: float,
        validate_every: int,
    ):
        self.observe = observe
        self.detect_offset_rads = detect_offset_rads
        self.max_step_s = max_step_s
        self.monitor = ValidityMonitor(validate_every) if validate_every else None
        self.register = apply_decoupling(molecule, register_mode)
        self.base_noise = (
            calibrate_rates(sample, self.register, register_mode) if sample is not None else None
        )
        self.mode: DecouplingMode | None = None
        self.set_decoupling(start_mode)

    def set_decoupling(self, mode: DecouplingMode) -> None:
        if mode == self.mode:
            return
        active = set(apply_decoupling(self.register, mode).names)
        if not active <= set(self.register.names):
            raise ValueError("decoupling mode outside the allocated register")
        couplings = {
            k: j for k, j in self.register.couplings.items() if k[0] in active and k[1] in active
        }
        self.system = SpinSystem(self.register.spins, couplings, self.register.reference_frequency_hz)
        if self.base_noise is not None:
            rates = {
                n: (self.base_noise.rate(n) if n in active else 0.0) for n in self.register.names
            }
            self.noise: NoiseSpec | None = NoiseSpec(rates, mode)
        else:
            self.noise = None
        self.h_circuit = build_hamiltonian(
            self.system, corotating_frame(self.system), warn_secular=False
        )
        self.h_detect = build_hamiltonian(
            self.system,
            detection_frame(self.system, self.observe, self.detect_offset_rads),
            warn_secular=False,
        )
        self.mode = mode

    @property
    def live_noise(self) -> NoiseSpec | None:
        if self.noise is None or self.noise.max_rate == 0.0:
            return None
        return self.noise

    def delay(self, state: DensityMatrix, duration_s: float) -> DensityMatrix:
        if duration_s == 0.0:
            return state
        noise = self.live_noise
        if noise is None:
            p = np.asarray(phase_vector(self.h_circuit, duration_s))
            state.matrix *= np.outer(p, p.conj())
            if self.monitor is not None:
                self.monitor.check(state)
            return state
        cap = min(self.max_step_s, MAX_RATE_DT / noise.max_rate)
        steps = max(1, math.ceil(duration_s / cap))
        return evolve(state, self.h_circuit, noise, duration_s / steps, steps, monitor=self.monitor)


def _build_initial(
    run: _Run, init: str | DensityMatrix, epsilon: float | None
) -> DensityMatrix:
    if isinstance(init, DensityMatrix):
        if tuple(init.spins) != run.system.names:
            raise ValueError(
                f"initial state register {init.spins} does not match "
                f"decoupled register {run.system.names}"
            )
        return init.copy()
    if init == "thermal" and epsilon is not None:
        return thermal_state(run.system, epsilon)
    return initial_state(run.system, init)


def execute_program(
    program: PulseProgram,
    molecule: SpinSystem,
    *,
    sample: SampleSpec | None = None,
    decoupling: DecouplingMode | str = DecouplingMode.FULL,
    init: str | DensityMatrix = "thermal",
    observe: str = "CC",
    detect_offset_rads: float = DEFAULT_DETECT_OFFSET_RADS,
    max_step_s: float = DEFAULT_MAX_STEP_S,
    acquire_max_step_s: float | None = None,
    validate_every: int = 0,
    epsilon: float | None = None,
    stop_before_acquire: bool = False,
) -> ExecutionResult:
    """Run a pulse program end to end and acquire its FID.

    The register is sized before the initial state is built: it holds every
    spin that is active under the least decoupled mode the program (or the
    ``decoupling`` argument, when the program has no directives) ever uses.
    ``decouple`` events then gate spins on and off mid-program.  With
    ``stop_before_acquire`` the run halts after the last pre-acquisition
    event (residual virtual-Z frames already applied) and no FID is taken.
    ``max_step_s`` limits integrator steps during circuit delays;
    acquisition steps are limited by the dwell time and the rate guard
    unless ``acquire_max_step_s`` tightens them further.
    """
    problems = program.validate()
    if problems:
        raise ValueError("invalid program: " + "; ".join(d.message for d in problems))

    modes = _decouple_modes(program)
    start_mode = modes[0] if modes else DecouplingMode.parse(decoupling)
    register_mode = min(modes or [start_mode], key=lambda m: _MODE_RANK[m])
    run = _Run(
        molecule,
        register_mode,
        start_mode,
        sample,
        observe,
        detect_offset_rads,
        max_step_s,
        validate_every,
    )
    state = _build_initial(run, init, epsilon)

    expanded = expand(program)
    fid: Fid | None = None
    for ev in expanded.events:
        if isinstance(ev, Pulse):
            state = apply_rotation(
                state, run.system, resolve_targets(ev.target, run.system), ev.phi, ev.theta
            )
        elif isinstance(ev, Delay):
            state = run.delay(state, ev.seconds)
        elif isinstance(ev, VirtualZ):
            # residual frame from expansion: align the receiver by rotating
            # the state once, physically
            state = apply_z(state, run.system, resolve_targets(ev.target, run.system), ev.theta)
        elif isinstance(ev, Decouple):
            run.set_decoupling(ev.mode)
        elif isinstance(ev, Acquire):
            if stop_before_acquire:
                break
            fid, state = acquire_fid(
                state,
                run.h_detect,
                run.live_noise,
                ev.points,
                ev.dwell_s,
                observe=observe,
                max_step_s=acquire_max_step_s,
                monitor=run.monitor,
            )
        else:
            raise TypeError(f"unexpected event in expanded program: {ev!r}")
    return ExecutionResult(
        final_state=state,
        fid=fid,
        system=run.system,
        noise=run.noise,
        duration_s=expanded.duration_s,
        validity_checks=run.monitor.checks if run.monitor else 0,
    )


def circuit_state(program: PulseProgram, molecule: SpinSystem, **kwargs) -> DensityMatrix:
    """State right before acquisition (residual virtual-Z applied)."""
    result = execute_program(program, molecule, stop_before_acquire=True, **kwargs)
    return result.final_state
