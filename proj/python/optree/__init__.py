"""Optional Polya tree density estimation on [0,1) with credible bands."""

from ._core import (
    Histogram,
    Model,
    band,
    cdf_band,
    fit,
    rate_study,
    reproduce_table1,
    run_pipeline,
    simulate,
    truth_density,
)

__all__ = [
    "Histogram",
    "Model",
    "band",
    "cdf_band",
    "fit",
    "rate_study",
    "reproduce_table1",
    "run_pipeline",
    "simulate",
    "truth_density",
]
