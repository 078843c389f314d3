"""freqgate: electro-optic frequency-bin gate design and characterization."""

from .lattice import (
    FourierDrive,
    GateTarget,
    ModeLattice,
    ShaperPattern,
    TransferMatrix,
    wrap_phase,
)
from .multiport import (
    cascade_columns,
    compose_cascade,
    dft_matrix,
    dft_target,
    eom_diagonal,
    fidelity,
    fixed_gauge,
    hadamard_target,
    rf_power_dbm,
    scatter_bound,
    shaper_diagonal,
    single_eom_ceiling,
    success_probability,
    toeplitz_from_drive,
    truncate,
)
from .optimizer import (
    DesignProblem,
    DesignResult,
    ParameterVector,
    ScalingRow,
    SingleEomResult,
    objective,
    optimize,
    parallel_gate_metrics,
    passband_truncation_check,
    scaling_study,
    single_eom_search,
)
from .lab import (
    Detector,
    FringeTrace,
    PhotonCountingScan,
    ProbeState,
    ReconstructedMultiport,
    Spectrum,
    VirtualApparatus,
    db_to_transmissivity,
    embed_window_matrix,
    fit_fringe,
    measure_spectrum,
    phase_scan,
    photon_counting_scan,
    reconstruct,
    reconstruct_amplitudes,
    visibility,
)

__version__ = "0.1.0"
