"""Entangling two held optical modes through a weak cross-Kerr probe and
linear-optics elimination measurements: scheme synthesis, truncated-Fock
simulation, entanglement scans, and noise/feasibility budgets."""

from .design import (
    DetectionScheme,
    EliminationRoots,
    TargetCoefficients,
    build_scheme,
    coeffs_from_photon_target,
    from_json,
    semi_success_coeffs,
    solve_roots,
    to_json,
    transmittances,
)
from .entangle import (
    EntanglementReport,
    entropy_of_coefficients,
    entropy_of_target,
    optimize_coefficients,
    schmidt_entropy,
    semi_success_entropy,
)
from .errors import (
    DegenerateLeadingCoefficient,
    DomainError,
    KerrlinkError,
    NonConvergence,
    NoSolution,
    ShapeMismatch,
    TailTooHeavy,
    TruncationOverflow,
    UnknownMode,
)
from .fock import (
    DensOp,
    FockVector,
    TruncationSpec,
    apply_beamsplitter,
    apply_cross_kerr,
    apply_displacement,
    coherent_amplitudes,
    fidelity,
    inner,
    min_cutoff,
    product_state,
    project_click,
    reduce_to_density,
    trace_distance,
)
from .noise import (
    FeasibilityReport,
    FidelityBreakdown,
    NoiseParams,
    attenuation_db,
    darkcount_loss_limit,
    feasibility_check,
    fidelity_leading_order,
    fidelity_sweep,
    loss_sweep,
    practical_cutoff_db,
    success_probability,
    superop_pipeline_fidelity,
)
from .presets import PRESET_NAMES, Preset, get_preset
from .protocol import (
    OutcomeRecord,
    ProtocolParams,
    all_click_record,
    analytic_target_state,
    dominant_eigenstate,
    make_protocol,
    operator_path_final_state,
    oracle_equivalence,
    run_full_protocol,
    success_probability_ideal,
)

__version__ = "0.1.0"
