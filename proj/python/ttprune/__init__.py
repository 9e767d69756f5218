# Copyright 2026 The ttprune Authors
# Licensed under the Apache License, Version 2.0

"""Time-triggered federated learning with joint pruning and bandwidth allocation."""

from ._ttprune import (
    BoundConstants,
    ConfigError,
    Error,
    FormatError,
    InfeasibleError,
    IoError,
    LayerLayout,
    NetworkConfig,
    TierProfile,
    aggregation_weights,
    build_mask,
    dbm_to_watts,
    min_pruning_ratio,
    path_gain,
    pruned_weight_count,
    run,
    solve_lambda,
    uplink_rate,
)

__all__ = [
    "BoundConstants",
    "ConfigError",
    "Error",
    "FormatError",
    "InfeasibleError",
    "IoError",
    "LayerLayout",
    "NetworkConfig",
    "TierProfile",
    "aggregation_weights",
    "build_mask",
    "dbm_to_watts",
    "min_pruning_ratio",
    "path_gain",
    "pruned_weight_count",
    "run",
    "solve_lambda",
    "uplink_rate",
]
