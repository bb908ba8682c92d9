"""Consensus+innovations Kalman filter: gain design, filtering and Monte-Carlo evaluation."""

from ._cikf import (
    CapacityEstimate,
    CikfError,
    ComparisonSummary,
    GainSchedule,
    ModelParams,
    ModelSpec,
    MseReport,
    PseudoModel,
    StabilityReport,
    ValidationReport,
    __version__,
    build_pseudo_model,
    capacity_lower_bound,
    generate_paper_model,
    load_model,
    model_hash,
    mse_compare,
    precompute_schedule,
    run_command,
    run_montecarlo,
    save_model,
    simulate_truth,
    stability_check,
    validate_model,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
