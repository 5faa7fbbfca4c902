"""Backward-induction analysis of random-order stopping on a three-point
hard instance: exact finite-size dynamic program, closed-form asymptotics,
a certified hardness bound, exhaustive and Monte Carlo oracles, and a
parameter sweep."""

from .instance import (
    ConditionCheck,
    ConditionReport,
    InfeasibleInstanceError,
    InstanceParams,
    ParameterError,
    ValueDistribution,
    make_instance,
    validate,
)
from .dp import (
    AcceptanceTimes,
    ThresholdTables,
    acceptance_times,
    compute_thresholds,
    emit_threshold_curves,
    gambler_prophet_ratio,
    optimal_value,
    phi_closed_form,
    write_threshold_csv,
)
from .prophet import ProphetValue, prophet_exact, prophet_limit, prophet_value
from .asymptotics import (
    AsymptoticProfile,
    ConsistencyError,
    DiagnosticCheck,
    DiagnosticsReport,
    OrderingError,
    conditional_expectation_asymptotic,
    k_star,
    lambda_mu_star,
    partial_sums,
    q_derivatives,
    q_eval,
    verify_bound_sandwich,
)
from .bound import (
    BracketError,
    CertificationError,
    ErrorCertificate,
    HardnessBound,
    MaxIterationsError,
    bisect_qprime,
    certify,
    hardness_bound,
)
from .oracle import (
    HistoryValue,
    OracleSizeError,
    SimulationReport,
    exhaustive_optimal_value,
    history_values,
    simulate_policy,
    simulate_prophet,
)
from .sweep import (
    SweepRecord,
    SweepSizeError,
    SweepSpec,
    dp_cross_check,
    refine,
    run_sweep,
    write_sweep_csv,
)

__version__ = "0.1.0"
