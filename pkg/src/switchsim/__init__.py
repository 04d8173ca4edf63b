"""Switching-detector qubit readout: propagators, fidelities, trajectories,
switching-time tomography and S-curve generation."""

__version__ = "0.1.0"

from .coherent import (
    CoherentDetectorParams,
    EffectiveRates,
    coherent_fidelity,
    effective_couplings,
    rates_dominant_coupling,
    rates_large_bias,
)
from .detector import (
    DetectorParams,
    ProbeBasis,
    generator,
    p_no_switch,
    p_switch,
    probe_basis,
    rate_matrix,
    survival_probability,
    switch_density,
    u_ham,
    u_ns,
    u_ns_stepped,
    u_s,
)
from .measurement import (
    FidelityCurve,
    MeasurementDecomposition,
    case1_pulse_fidelity,
    case1_switch_fidelity,
    case1_tau0,
    case3_basis,
    case3_max_fidelity,
    case3_pulse_fidelity,
    decompose,
    outcome_fidelity,
    overall_fidelity_numeric,
    purity_equals_fidelity_check,
    two_rate_overall_fidelity,
)
from .scurves import SCurvePoint, SCurveSpec, bare_rates, max_fidelity_vs_beta, scurve
from .tomography import (
    BlochComponents,
    IdentifiabilityReport,
    TomographyResult,
    fit,
    identifiability,
    model_density,
)
from .trajectory import (
    Histogram,
    SimConfig,
    TrajectoryOutcome,
    chi2_vs_analytic,
    merge_histograms,
    read_histogram_csv,
    run_ensemble,
    run_trajectory,
    sample_switch_times,
    write_histogram_csv,
)

__all__ = [
    "BlochComponents",
    "CoherentDetectorParams",
    "DetectorParams",
    "EffectiveRates",
    "FidelityCurve",
    "Histogram",
    "IdentifiabilityReport",
    "MeasurementDecomposition",
    "ProbeBasis",
    "SCurvePoint",
    "SCurveSpec",
    "SimConfig",
    "TomographyResult",
    "TrajectoryOutcome",
    "bare_rates",
    "case1_pulse_fidelity",
    "case1_switch_fidelity",
    "case1_tau0",
    "case3_basis",
    "case3_max_fidelity",
    "case3_pulse_fidelity",
    "chi2_vs_analytic",
    "coherent_fidelity",
    "decompose",
    "effective_couplings",
    "fit",
    "generator",
    "identifiability",
    "max_fidelity_vs_beta",
    "merge_histograms",
    "model_density",
    "outcome_fidelity",
    "overall_fidelity_numeric",
    "p_no_switch",
    "p_switch",
    "probe_basis",
    "purity_equals_fidelity_check",
    "rate_matrix",
    "rates_dominant_coupling",
    "rates_large_bias",
    "read_histogram_csv",
    "run_ensemble",
    "run_trajectory",
    "sample_switch_times",
    "scurve",
    "survival_probability",
    "switch_density",
    "two_rate_overall_fidelity",
    "u_ham",
    "u_ns",
    "u_ns_stepped",
    "u_s",
    "write_histogram_csv",
]
