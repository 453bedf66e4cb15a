"""Functional-output orthogonal additive Gaussian processes."""

from ._core import (
    Dataset,
    FoagpError,
    GridDataset,
    Model,
    cli,
    fit,
    fit_grid,
    simulate,
    simulate_grid,
    truth,
)

__all__ = [
    "Dataset",
    "FoagpError",
    "GridDataset",
    "Model",
    "cli",
    "fit",
    "fit_grid",
    "simulate",
    "simulate_grid",
    "truth",
]
