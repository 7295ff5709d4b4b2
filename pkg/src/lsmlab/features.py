"""Fixed-length feature vectors from output-neuron spike rasters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ReservoirRecording

FAMILY_STATISTICAL_MNIST = "statistical_mnist"
FAMILY_STATISTICAL_BALLS = "statistical_balls"
FAMILY_TRACE = "trace"

STATISTICAL_MNIST_KINDS = ("count", "count_var", "first_spike", "mean_time")
STATISTICAL_BALLS_KINDS = ("mean_time", "first_spike", "last_spike", "isi_mean", "isi_var")


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureSpec:
    family: str
    n_output_neurons: int
    tau: float = 60.0  # trace family only
    count_var_bin: int = 10  # statistical MNIST family only

    def __post_init__(self):
        if self.family not in (FAMILY_STATISTICAL_MNIST, FAMILY_STATISTICAL_BALLS, FAMILY_TRACE):
            raise FeatureError(f"unknown feature family: {self.family!r}")
        if self.n_output_neurons < 1:
            raise FeatureError("need at least one output neuron")
        if self.tau <= 0:
            raise FeatureError("tau must be positive")
        if self.count_var_bin < 1:
            raise FeatureError("count_var_bin must be >= 1")

    @property
    def n_features(self) -> int:
        per_neuron = {
            FAMILY_STATISTICAL_MNIST: len(STATISTICAL_MNIST_KINDS),
            FAMILY_STATISTICAL_BALLS: len(STATISTICAL_BALLS_KINDS),
            FAMILY_TRACE: 1,
        }[self.family]
        return per_neuron * self.n_output_neurons


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray  # (n_examples, n_features)
    columns: list[tuple[int, str]]  # (neuron index within output set, feature kind)

    def __post_init__(self):
        if not np.isfinite(self.values).all():
            raise FeatureError("feature values must be finite")


def _check_neurons(recordings: list[ReservoirRecording], spec: FeatureSpec) -> None:
    for rec in recordings:
        if len(rec.spikes) < spec.n_output_neurons:
            raise FeatureError(
                f"recording has {len(rec.spikes)} output neurons, "
                f"spec needs {spec.n_output_neurons}"
            )


def features_statistical_mnist(
    recordings: list[ReservoirRecording], spec: FeatureSpec
) -> FeatureMatrix:
    """Per neuron: spike count, variance of binned spike counts, first-spike
    time, mean spike time. No-spike sentinels: (0, 0, T, T)."""
    if spec.family != FAMILY_STATISTICAL_MNIST:
        raise FeatureError("spec.family must be statistical_mnist")
    _check_neurons(recordings, spec)
    rows = []
    columns = [(n, kind) for n in range(spec.n_output_neurons) for kind in STATISTICAL_MNIST_KINDS]
    for rec in recordings:
        t_end = rec.duration
        n_bins = -(-t_end // spec.count_var_bin)  # ceil
        row = np.empty(spec.n_features)
        for n in range(spec.n_output_neurons):
            times = rec.spikes[n]
            if times.size == 0:
                row[4 * n : 4 * n + 4] = (0.0, 0.0, t_end, t_end)
                continue
            bin_counts = np.bincount(times // spec.count_var_bin, minlength=n_bins)
            row[4 * n : 4 * n + 4] = (
                times.size,
                np.var(bin_counts),
                times[0],
                times.mean(),
            )
        rows.append(row)
    return FeatureMatrix(values=np.array(rows), columns=columns)


def features_statistical_balls(
    recordings: list[ReservoirRecording], spec: FeatureSpec
) -> FeatureMatrix:
    """Per neuron: mean spike time, first- and last-spike time, mean ISI,
    ISI variance. Sentinels: no spikes -> times = T; <2 spikes -> ISI stats 0."""
    if spec.family != FAMILY_STATISTICAL_BALLS:
        raise FeatureError("spec.family must be statistical_balls")
    _check_neurons(recordings, spec)
    rows = []
    columns = [(n, kind) for n in range(spec.n_output_neurons) for kind in STATISTICAL_BALLS_KINDS]
    for rec in recordings:
        t_end = rec.duration
        row = np.empty(spec.n_features)
        for n in range(spec.n_output_neurons):
            times = rec.spikes[n]
            if times.size == 0:
                row[5 * n : 5 * n + 5] = (t_end, t_end, t_end, 0.0, 0.0)
                continue
            isis = np.diff(times)
            row[5 * n : 5 * n + 5] = (
                times.mean(),
                times[0],
                times[-1],
                isis.mean() if isis.size else 0.0,
                np.var(isis) if isis.size else 0.0,
            )
        rows.append(row)
    return FeatureMatrix(values=np.array(rows), columns=columns)


def features_trace(recordings: list[ReservoirRecording], spec: FeatureSpec) -> FeatureMatrix:
    """Terminal value of the exponentially filtered spike train,
    x(t) = x(t-1) * exp(-1/tau) + s(t), one feature per neuron."""
    if spec.family != FAMILY_TRACE:
        raise FeatureError("spec.family must be trace")
    _check_neurons(recordings, spec)
    rows = []
    columns = [(n, "trace") for n in range(spec.n_output_neurons)]
    for rec in recordings:
        t_last = rec.duration - 1
        row = np.empty(spec.n_features)
        for n in range(spec.n_output_neurons):
            times = rec.spikes[n]
            # closed form: sum of exp(-(T-1-t)/tau) over spike times t
            row[n] = np.exp(-(t_last - times) / spec.tau).sum() if times.size else 0.0
        rows.append(row)
    return FeatureMatrix(values=np.array(rows), columns=columns)


def extract(recordings: list[ReservoirRecording], spec: FeatureSpec) -> FeatureMatrix:
    return {
        FAMILY_STATISTICAL_MNIST: features_statistical_mnist,
        FAMILY_STATISTICAL_BALLS: features_statistical_balls,
        FAMILY_TRACE: features_trace,
    }[spec.family](recordings, spec)


def export_csv(matrix: FeatureMatrix, path) -> None:
    """Feature matrix as CSV; header row names columns as neuron<i>_<kind>."""
    header = ",".join(f"neuron{n}_{kind}" for n, kind in matrix.columns)
    np.savetxt(path, matrix.values, delimiter=",", header=header, comments="")
