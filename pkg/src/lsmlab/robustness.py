"""Robustness intervals over performance curves and criticality statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_GAMMA = 0.85
GAMMA_RANGE = (0.80, 0.85, 0.90)


class RobustnessError(ValueError):
    pass


@dataclass(frozen=True)
class PerformanceCurve:
    """Metric mean/std sampled over a mean-synaptic-weight grid."""

    w_grid: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    metric: str  # "accuracy" | "f1_macro" | "mcc"
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.w_grid, dtype=float)
        if grid.size == 0:
            raise RobustnessError("empty curve")
        if np.any(np.diff(grid) <= 0):
            raise RobustnessError("w grid must be sorted strictly increasing")
        if len(self.mean) != grid.size or len(self.std) != grid.size:
            raise RobustnessError("mean/std length must match grid length")
        object.__setattr__(self, "w_grid", grid)
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=float))


@dataclass(frozen=True)
class RobustnessReport:
    gamma: float
    threshold: float
    w_min: float
    w_max: float
    delta: float
    w_crit: float | None = None
    contains_crit: bool | None = None
    midpoint_below_crit: bool | None = None


def robustness_interval(
    curve: PerformanceCurve, gamma: float = DEFAULT_GAMMA, w_crit: float | None = None
) -> RobustnessReport:
    """Interval of weights whose metric stays at or above gamma * peak.

    The interval is defined by the smallest and largest qualifying grid
    points; interior sub-threshold dips stay inside it.
    """
    if not 0 < gamma < 1:
        raise RobustnessError("gamma must lie in (0, 1)")
    peak = float(np.max(curve.mean))
    if peak <= 0:
        # with a non-positive peak, gamma * peak >= peak and no grid point
        # qualifies; the interval is undefined (possible for the correlation
        # metric at chance-level performance)
        raise RobustnessError("curve peak must be positive")
    threshold = gamma * peak
    above = np.nonzero(curve.mean >= threshold)[0]
    w_min = float(curve.w_grid[above[0]])
    w_max = float(curve.w_grid[above[-1]])
    contains = midpoint_below = None
    if w_crit is not None and w_crit > 0:
        contains = bool(w_min <= w_crit <= w_max)
        midpoint_below = bool((w_min + w_max) / 2.0 < w_crit)
    return RobustnessReport(
        gamma=gamma,
        threshold=threshold,
        w_min=w_min,
        w_max=w_max,
        delta=w_max - w_min,
        w_crit=w_crit,
        contains_crit=contains,
        midpoint_below_crit=midpoint_below,
    )


def gamma_sensitivity(
    curve: PerformanceCurve, gammas=GAMMA_RANGE
) -> dict[float, float]:
    """Interval width per threshold fraction; non-increasing in gamma."""
    return {g: robustness_interval(curve, g).delta for g in gammas}


def trend_table(grouped_deltas: dict[str, list[list[float]]]) -> dict[str, dict]:
    """Average relative width changes between consecutive hyperparameter levels.

    ``grouped_deltas`` maps metric name to a list of per-setting width
    triples [delta_min_level, delta_mid_level, delta_max_level] (or longer
    level runs). Returns, per metric, the mean relative change for each
    consecutive step plus the raw per-setting changes; steps starting from a
    zero width are flagged and excluded from the mean.
    """
    table: dict[str, dict] = {}
    for metric, rows in grouped_deltas.items():
        if not rows:
            continue
        n_steps = len(rows[0]) - 1
        if n_steps < 1:
            raise RobustnessError("need at least 2 hyperparameter levels per group")
        changes: list[list[float]] = [[] for _ in range(n_steps)]
        flagged = 0
        for row in rows:
            if len(row) != n_steps + 1:
                raise RobustnessError("inconsistent level count across settings")
            for i in range(n_steps):
                prev, nxt = row[i], row[i + 1]
                if prev == 0:
                    flagged += 1
                    continue
                changes[i].append((nxt - prev) / prev)
        table[metric] = {
            "mean_changes": [float(np.mean(c)) if c else float("nan") for c in changes],
            "per_setting_changes": changes,
            "undefined_rows": flagged,
        }
    return table


def criticality_consistency(reports: list[RobustnessReport]) -> dict[str, float]:
    """Containment and subcritical-midpoint rates over interval reports."""
    usable = [r for r in reports if r.contains_crit is not None]
    if not usable:
        return {"n": 0, "containment_rate": float("nan"), "midpoint_below_rate": float("nan")}
    return {
        "n": len(usable),
        "containment_rate": sum(r.contains_crit for r in usable) / len(usable),
        "midpoint_below_rate": sum(r.midpoint_below_crit for r in usable) / len(usable),
    }


def curve_noise_cv(curves: list[PerformanceCurve]) -> float:
    """Mean coefficient of variation std/mean across all curve points.

    Points with zero mean are skipped (a CV is undefined there).
    """
    ratios = []
    for curve in curves:
        mask = curve.mean > 0
        ratios.append(curve.std[mask] / curve.mean[mask])
    flat = np.concatenate(ratios) if ratios else np.array([])
    if flat.size == 0:
        return float("nan")
    return float(np.mean(flat))
