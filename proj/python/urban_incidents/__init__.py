"""Latent-state estimation for urban incidents from sparse inspection ratings
and dense crowdsourced reports."""

from ._core import (  # noqa: F401
    Demographics,
    FullSyntheticData,
    FullSyntheticSpec,
    ObservationPanel,
    SpatialGraph,
    SplitSpec,
    TrainConfig,
    TrainedModel,
    VariantConfig,
    WeekWindow,
    build_graph,
    carry_forward_ratings,
    empirical_report_frequency,
    expected_calibration_error,
    grid_graph,
    kmeans,
    load_panel,
    make_fully_synthetic,
    make_time_splits,
    month_index,
    normalize_demographics,
    pair_correlation,
    pair_rmse,
    run_cluster,
    run_evaluate,
    run_generate,
    run_ingest,
    run_sweep,
    run_train,
    save_panel,
    subsample_ratings,
    topk_coverage,
    train,
    variant_config,
)

__all__ = [name for name in dir() if not name.startswith("_")]
