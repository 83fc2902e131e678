"""Multivariate spatial Gaussian-process models with full-scale covariance approximations."""

from ._fsagp import (
    ConfigError,
    NumericalError,
    Workspace,
    chordal_distance,
    fit,
    plugin_mspe,
    simulate,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "Workspace",
    "chordal_distance",
    "fit",
    "plugin_mspe",
    "simulate",
]
