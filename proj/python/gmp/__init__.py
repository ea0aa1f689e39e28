"""Python bindings for the gmp training core."""

from ._core import (
    ConfigError,
    ContractError,
    Error,
    NumericError,
    ShapeError,
    apply_cagp,
    canonical_config,
    detect_conflict,
    discrepancy_ratios,
    domain_confidence,
    generate_splits,
    grad_check,
    predicted_loss_change,
    project_orthogonal,
    run_experiment,
    semantic_confidence,
    strategies,
    suppression_coefficient,
)

__all__ = [name for name in dir() if not name.startswith("_")]
