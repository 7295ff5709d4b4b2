"""Closed-form mean-field analytics for LIF reservoirs.

Mean inter-spike interval and firing rate as functions of the mean synaptic
weight, the critical mean weight, the equivalent-threshold transform that
preserves it, and normalized distances between sampled curves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MeanFieldError(ValueError):
    """Invalid configuration or grid for a mean-field computation."""


@dataclass(frozen=True)
class MeanFieldConfig:
    """Global hyperparameters entering the mean-field expressions."""

    theta: float
    input_amplitude: float
    t_ref: float
    beta: float
    n_neurons: int

    def __post_init__(self):
        if self.theta <= 0:
            raise MeanFieldError("theta must be positive")
        if self.input_amplitude <= 0:
            raise MeanFieldError("input_amplitude must be positive")
        if self.t_ref < 0:
            raise MeanFieldError("t_ref must be non-negative")
        if self.beta <= 0 or self.n_neurons <= 0:
            raise MeanFieldError("beta and n_neurons must be positive")

    @property
    def in_degree(self) -> float:
        return self.beta * self.n_neurons


@dataclass(frozen=True)
class RateCurve:
    """Firing rate sampled on a mean-weight grid."""

    w_grid: np.ndarray
    values: np.ndarray

    def normalized(self) -> "RateCurve":
        """Rescale so the maximum value is 1."""
        peak = float(np.max(self.values))
        if peak <= 0:
            raise MeanFieldError("cannot normalize a non-positive curve")
        return RateCurve(self.w_grid, self.values / peak)


def isi_mean(cfg: MeanFieldConfig, w) -> float | np.ndarray:
    """Mean inter-spike interval at mean synaptic weight w (time steps)."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise MeanFieldError("w must be non-negative")
    kn = cfg.in_degree
    gap = cfg.theta - w * kn
    radicand = gap * gap + 4.0 * cfg.input_amplitude * kn * cfg.t_ref * w
    isi = (gap + np.sqrt(radicand)) / (2.0 * cfg.input_amplitude)
    if np.any(isi <= 0):
        raise MeanFieldError("non-positive mean ISI: invalid configuration")
    return isi if isi.ndim else float(isi)


def rate_theoretical(cfg: MeanFieldConfig, w_grid) -> RateCurve:
    """Firing-rate curve 1/ISI over a weight grid."""
    grid = np.asarray(w_grid, dtype=float)
    return RateCurve(grid, 1.0 / isi_mean(cfg, grid))


def w_critical(cfg: MeanFieldConfig) -> float:
    """Mean-field critical mean synaptic weight.

    May be non-positive for strong external drive; callers needing a
    crit-anchored weight grid must check ``is_physical_w_crit``.
    """
    return (cfg.theta - 2.0 * cfg.input_amplitude * cfg.t_ref) / cfg.in_degree


def is_physical_w_crit(cfg: MeanFieldConfig) -> bool:
    return w_critical(cfg) > 0


def theta_equivalent(cfg_ref: MeanFieldConfig, beta_alt: float) -> float:
    """Firing threshold that reproduces, at the reference density, the
    critical weight of the alternative density ``beta_alt``."""
    if beta_alt <= 0:
        raise MeanFieldError("beta_alt must be positive")
    drive = 2.0 * cfg_ref.input_amplitude * cfg_ref.t_ref
    return (cfg_ref.theta - drive) * (cfg_ref.beta / beta_alt) + drive


def curve_distance(curve_a: RateCurve, curve_b: RateCurve, normalize: bool = False) -> float:
    """Normalized L1 distance between two curves on a shared grid.

    d = integral |a - b| / (0.5 * integral (a + b)), trapezoidal quadrature.
    With ``normalize`` each curve is first rescaled to peak 1 (the shape
    distance used for empirical performance curves).
    """
    if curve_a.w_grid.shape != curve_b.w_grid.shape or not np.array_equal(
        curve_a.w_grid, curve_b.w_grid
    ):
        raise MeanFieldError("curves must share the same w grid")
    if normalize:
        curve_a = curve_a.normalized()
        curve_b = curve_b.normalized()
    a, b = curve_a.values, curve_b.values
    num = np.trapezoid(np.abs(a - b), curve_a.w_grid)
    den = 0.5 * np.trapezoid(a + b, curve_a.w_grid)
    if den <= 0:
        raise MeanFieldError("zero or negative denominator in curve distance")
    return float(num / den)


def rate_curve_difference(cfg_a: MeanFieldConfig, cfg_b: MeanFieldConfig, w_grid) -> np.ndarray:
    """Pointwise |rate_a - rate_b| on a shared grid."""
    grid = np.asarray(w_grid, dtype=float)
    return np.abs(rate_theoretical(cfg_a, grid).values - rate_theoretical(cfg_b, grid).values)


def crit_anchored_grid(cfg: MeanFieldConfig, points: int = 40) -> np.ndarray:
    """Uniform weight grid from 0.01 to 2 times the critical weight."""
    wc = w_critical(cfg)
    if wc <= 0:
        raise MeanFieldError(
            "critical weight is non-physical (<= 0); supply an explicit grid"
        )
    if points < 2:
        raise MeanFieldError("grid needs at least 2 points")
    return np.linspace(0.01 * wc, 2.0 * wc, points)
