"""Single-query database fetching on a simulated liquid-state NMR register.

The package simulates the full experiment: a logical register of one
readout (ancilla) spin plus database spins, a compiler that turns a bit
pattern query into one- and two-qubit pulse network (optionally expanded
to refocused hard pulses over the always-on couplings), mixed-state
ensemble evolution from thermal equilibrium or an effective pure state,
and an ancilla spectrometer whose inverted lines reveal every matching
item after a single oracle application.
"""

from .spin_system import (
    ConfigError,
    QueryPattern,
    Spin,
    SpinSystem,
    SpinSystemError,
    check_decodability,
    crotonic_default,
    item_frequency,
    load_spin_system,
    load_spin_system_file,
)
from .operators import (
    controlled_phase_direct,
    distance_up_to_global_phase,
    hadamard_like,
    single_spin_rotation,
    unitarity_defect,
    zz_evolution,
)
from .compiler import (
    CompileError,
    Delay,
    GateSequence,
    SelectivePulse,
    VirtualZ,
    ZZEvolution,
    build_query_network,
    compile_multilinear_z_phase,
    expand_to_hard_pulses,
    format_sequence,
    sequence_report,
    sequence_unitary,
)
from .states import (
    DensityState,
    StateError,
    apply_query_diagonal,
    apply_unitary,
    effective_pure_ancilla,
    purity,
    thermal_state,
)
from .spectrometer import (
    AcquisitionParams,
    DecodeError,
    Peak,
    SpectralLine,
    Spectrum,
    SpectrometerError,
    acquire_fid,
    analytic_spectrum,
    classify_marked,
    decode_item,
    decode_peaks,
    fft_spectrum,
    line_table,
    pick_peaks,
    spectral_lines,
)
from .cli import RunConfig, RunResult, bench_report, classical_oracle, run_fetch

__version__ = "0.1.0"

__all__ = [
    "AcquisitionParams",
    "CompileError",
    "ConfigError",
    "DecodeError",
    "Delay",
    "DensityState",
    "GateSequence",
    "Peak",
    "QueryPattern",
    "RunConfig",
    "RunResult",
    "SelectivePulse",
    "Spin",
    "SpinSystem",
    "SpinSystemError",
    "SpectralLine",
    "Spectrum",
    "SpectrometerError",
    "StateError",
    "VirtualZ",
    "ZZEvolution",
    "acquire_fid",
    "analytic_spectrum",
    "apply_query_diagonal",
    "apply_unitary",
    "bench_report",
    "build_query_network",
    "check_decodability",
    "classical_oracle",
    "classify_marked",
    "compile_multilinear_z_phase",
    "controlled_phase_direct",
    "crotonic_default",
    "decode_item",
    "decode_peaks",
    "distance_up_to_global_phase",
    "effective_pure_ancilla",
    "expand_to_hard_pulses",
    "fft_spectrum",
    "format_sequence",
    "hadamard_like",
    "item_frequency",
    "line_table",
    "load_spin_system",
    "load_spin_system_file",
    "pick_peaks",
    "purity",
    "run_fetch",
    "sequence_report",
    "sequence_unitary",
    "single_spin_rotation",
    "spectral_lines",
    "thermal_state",
    "unitarity_defect",
    "zz_evolution",
]
