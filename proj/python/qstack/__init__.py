"""Quantile forecast stacking: point base forecasts in, 99 quantiles out."""

from ._core import (
    Panel,
    dm_test,
    evaluate,
    load_panel,
    pinball,
    qlr_quantiles,
    qrf_quantiles,
    qrs_quantiles,
    quantile_grid,
    synth_panel,
    write_panel,
)

__all__ = [
    "Panel",
    "dm_test",
    "evaluate",
    "load_panel",
    "pinball",
    "qlr_quantiles",
    "qrf_quantiles",
    "qrs_quantiles",
    "quantile_grid",
    "synth_panel",
    "write_panel",
]
