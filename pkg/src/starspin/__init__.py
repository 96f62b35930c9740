"""Star-topology nuclear-spin simulator.

A small library plus CLI that evolves product-basis density matrices of a
three-carbon sensor chain inside its proton environment, executes pulse
programs written in a tiny text DSL, applies calibrated flip-flop noise, and
reads the center spin out through FID acquisition and spectral phase
estimation.
"""

from .core import (
    DensityMatrix,
    Operator,
    Spin,
    SpinSystem,
    embed_pauli,
    partial_trace,
    prepare_rho_i,
    renormalized_thermal_state,
    thermal_deviation_matrix,
    thermal_state,
)
from .hamiltonian import (
    DiagonalHamiltonian,
    SecularityWarning,
    build_hamiltonian,
    corotating_frame,
    detection_frame,
    entangling_delay,
    free_propagator,
)
from .gates import (
    PhaseFrame,
    Rotation,
    apply_unitary,
    normalize_global_phase,
    pseudo_cnot,
    rotation_unitary,
    virtual_z,
)
from .noise import (
    DecouplingMode,
    FlipFlopChannel,
    NoiseSpec,
    SampleSpec,
    StepSizeError,
    apply_decoupling,
    calibrate_rates,
    dense_liouvillian,
    evolve,
    evolve_trajectory,
)
from .pulseprog import (
    Acquire,
    Decouple,
    Delay,
    ParseDiagnostic,
    ProgramError,
    Pulse,
    PulseProgram,
    Repeat,
    VirtualZ,
    builtin_sequence,
    expand,
    parse,
    parse_program,
    print_program,
)
from .acquisition import (
    DecayFit,
    Fid,
    SignalModelParams,
    Spectrum,
    SpectrumPeak,
    acquire_fid,
    analytic_signal,
    antiphase_pair_factor,
    extract_peak_phases,
    fid_from_trajectory,
    fit_decay,
    inverse_spectrum,
    spectrum,
    telegraph_coherence_factor,
    telegraph_conditional_factor,
    transverse_signal,
)
from .runner import ExecutionResult, circuit_state, execute_program, initial_state
from .experiments import (
    ExperimentConfig,
    run_fid_appendix,
    run_noise_decay,
    run_phase_sweep,
    run_program,
    run_spectrum_theory,
)
from .config import (
    ConfigError,
    default_molecule,
    load_molecule,
    load_sample,
    SAMPLE_PRESETS,
)

__version__ = "0.1.0"
