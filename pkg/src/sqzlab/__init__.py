"""Gaussian-optics simulator for measurement-and-feedforward squeezing."""

__version__ = "0.1.0"

from .states import (
    VACUUM_VARIANCE,
    GaussianState,
    HomodyneOutcome,
    InvariantViolation,
    SymplecticTransform,
    apply,
    apply_loss,
    beam_splitter,
    check_physical,
    displacement,
    homodyne_condition,
    homodyne_sample,
    make_coherent,
    make_squeezed_vacuum,
    make_vacuum,
    marginal_variance,
    partial_trace,
    phase_rotation,
    squeeze,
    symplectic_eigenvalues,
    tensor,
)
from .protocol import (
    ImperfectionModel,
    ProtocolConfig,
    ProtocolResult,
    db_to_nepers,
    ideal_output_map,
    nepers_to_db,
    nominal_gain,
    r_from_T,
    run_deterministic,
    run_trajectory,
    squeezing_db_from_T,
)
from .metrology import (
    FidelityReport,
    analytic_wigner,
    classical_limit_fidelity,
    fidelity_gaussian,
    ideal_squeezed_target,
    noise_power_db,
)
from .tomography import (
    PhaseScanRecord,
    WignerGrid,
    grid_moments,
    moments_from_scan,
    reconstruct_wigner,
    simulate_phase_scan,
)
from .compiler import (
    Displacement,
    GatePlan,
    Rotation,
    Squeezer,
    euler_decompose,
    plan_from_unitary,
    simulate_plan,
)

__all__ = [
    "VACUUM_VARIANCE", "GaussianState", "HomodyneOutcome", "InvariantViolation",
    "SymplecticTransform", "apply", "apply_loss", "beam_splitter",
    "check_physical", "displacement", "homodyne_condition", "homodyne_sample",
    "make_coherent", "make_squeezed_vacuum", "make_vacuum", "marginal_variance",
    "partial_trace", "phase_rotation", "squeeze", "symplectic_eigenvalues",
    "tensor",
    "ImperfectionModel", "ProtocolConfig", "ProtocolResult", "db_to_nepers",
    "ideal_output_map", "nepers_to_db", "nominal_gain", "r_from_T",
    "run_deterministic", "run_trajectory", "squeezing_db_from_T",
    "FidelityReport", "analytic_wigner", "classical_limit_fidelity",
    "fidelity_gaussian", "ideal_squeezed_target", "noise_power_db",
    "PhaseScanRecord", "WignerGrid", "grid_moments", "moments_from_scan",
    "reconstruct_wigner", "simulate_phase_scan",
    "Displacement", "GatePlan", "Rotation", "Squeezer", "euler_decompose",
    "plan_from_unitary", "simulate_plan",
]
