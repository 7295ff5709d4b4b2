"""Discrete-time LIF reservoir simulation.

Per step: exact exponential leak, external-spike deposits, recurrent deposits
with a one-step synaptic delay, threshold crossing with absolute refractoriness
(potential held at 0, inputs dropped). State is reset between examples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import SpikeTrainBatch, assign_inputs
from .topology import DirectedGraph

RESET_FIXED = "fixed"  # one uniform [0, theta] draw per neuron, reused per example
RESET_REDRAWN = "redrawn"  # fresh uniform [0, theta] draw at every example boundary

_RESET_KINDS = (RESET_FIXED, RESET_REDRAWN)


class DynamicsError(ValueError):
    pass


@dataclass(frozen=True)
class NeuronParams:
    theta: float
    t_ref: int
    input_amplitude: float

    def __post_init__(self):
        if self.theta <= 0:
            raise DynamicsError("theta must be positive")
        if self.t_ref < 0:
            raise DynamicsError("t_ref must be non-negative")
        if self.input_amplitude <= 0:
            raise DynamicsError("input_amplitude must be positive")


@dataclass(frozen=True)
class SynapseSpec:
    mean_weight: float
    weight_cv: float  # sigma / mean, taken verbatim (20 means sigma = 20*w)

    def __post_init__(self):
        if self.mean_weight < 0:
            raise DynamicsError("mean_weight must be non-negative")
        if self.weight_cv < 0:
            raise DynamicsError("weight_cv must be non-negative")


@dataclass(frozen=True)
class LeakSpec:
    mean_leak: float = 1.0 / 500.0
    leak_cv: float = 0.5

    def __post_init__(self):
        if self.mean_leak <= 0:
            raise DynamicsError("mean_leak must be positive")
        if self.leak_cv < 0:
            raise DynamicsError("leak_cv must be non-negative")


@dataclass(frozen=True)
class ReservoirInstance:
    """Immutable reservoir: graph, sampled weights/leaks, and neuron roles."""

    graph: DirectedGraph
    weight_matrix: np.ndarray  # (N, N), [pre, post]; zero where no edge
    leaks: np.ndarray  # (N,) per-neuron leak constants alpha_i
    params: NeuronParams
    input_map: np.ndarray  # channel -> neuron, injective
    output_neurons: np.ndarray  # sorted, disjoint from input_map

    def __post_init__(self):
        if np.intersect1d(self.input_map, self.output_neurons).size:
            raise DynamicsError("input and output neuron sets must be disjoint")
        if np.unique(self.input_map).size != self.input_map.size:
            raise DynamicsError("input_map must be injective")

    @property
    def n_neurons(self) -> int:
        return self.graph.n_neurons


@dataclass(frozen=True)
class ReservoirRecording:
    """Spike times of the output neurons for one simulated example."""

    duration: int
    spikes: list[np.ndarray]  # aligned with ReservoirInstance.output_neurons


def lognormal_params(mean: float, cv: float) -> tuple[float, float]:
    """(mu, sigma) of the underlying normal for a log-normal with given
    mean and coefficient of variation."""
    sigma_sq = np.log1p(cv * cv)
    mu = np.log(mean) - sigma_sq / 2.0
    return mu, float(np.sqrt(sigma_sq))


def sample_weights(graph: DirectedGraph, synapse: SynapseSpec, seed) -> np.ndarray:
    """Dense (N, N) weight matrix with Gaussian weights on the graph's edges.

    Negative draws are kept (inhibitory synapses)."""
    rng = np.random.default_rng(seed)
    sd = synapse.mean_weight * synapse.weight_cv
    w = np.zeros((graph.n_neurons, graph.n_neurons))
    w[graph.pre, graph.post] = rng.normal(synapse.mean_weight, sd, size=graph.n_edges)
    return w


def sample_leaks(n_neurons: int, leak: LeakSpec, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if leak.leak_cv == 0:
        return np.full(n_neurons, leak.mean_leak)
    mu, sigma = lognormal_params(leak.mean_leak, leak.leak_cv)
    return rng.lognormal(mu, sigma, size=n_neurons)


def instantiate_reservoir(
    graph: DirectedGraph,
    synapse: SynapseSpec,
    leak: LeakSpec,
    params: NeuronParams,
    n_inputs: int,
    n_outputs: int,
    seed,
) -> ReservoirInstance:
    """Sample weights, leaks, and disjoint input/output neuron roles."""
    if n_inputs + n_outputs > graph.n_neurons:
        raise DynamicsError(
            f"{n_inputs} inputs + {n_outputs} outputs exceed N={graph.n_neurons}"
        )
    root = np.random.SeedSequence(seed) if isinstance(seed, int) else seed
    s_weights, s_leaks, s_outputs, s_inputs = root.spawn(4)
    weights = sample_weights(graph, synapse, s_weights)
    leaks = sample_leaks(graph.n_neurons, leak, s_leaks)
    rng_out = np.random.default_rng(s_outputs)
    outputs = np.sort(rng_out.choice(graph.n_neurons, size=n_outputs, replace=False))
    input_map = assign_inputs(n_inputs, graph.n_neurons, outputs, s_inputs)
    return ReservoirInstance(
        graph=graph,
        weight_matrix=weights,
        leaks=leaks,
        params=params,
        input_map=input_map,
        output_neurons=outputs,
    )


def resample_weights(reservoir: ReservoirInstance, synapse: SynapseSpec, seed) -> ReservoirInstance:
    """New instance sharing everything but freshly drawn synaptic weights."""
    return ReservoirInstance(
        graph=reservoir.graph,
        weight_matrix=sample_weights(reservoir.graph, synapse, seed),
        leaks=reservoir.leaks,
        params=reservoir.params,
        input_map=reservoir.input_map,
        output_neurons=reservoir.output_neurons,
    )


def _initial_potentials(
    reservoir: ReservoirInstance, n_examples: int, reset: str, seed
) -> np.ndarray:
    """(n_examples, N) initial membrane potentials per the reset scheme."""
    if reset not in _RESET_KINDS:
        raise DynamicsError(f"unknown reset scheme: {reset!r}")
    rng = np.random.default_rng(seed)
    n = reservoir.n_neurons
    if reset == RESET_FIXED:
        row = rng.uniform(0.0, reservoir.params.theta, size=n)
        return np.broadcast_to(row, (n_examples, n)).copy()
    return rng.uniform(0.0, reservoir.params.theta, size=(n_examples, n))


def _simulate_group(
    reservoir: ReservoirInstance,
    examples: list[np.ndarray],
    v0: np.ndarray,
) -> list[ReservoirRecording]:
    """Simulate equal-duration examples side by side (state is per-example)."""
    duration = examples[0].shape[0]
    n = reservoir.n_neurons
    b = len(examples)
    theta = reservoir.params.theta
    t_ref = reservoir.params.t_ref
    amp = reservoir.params.input_amplitude
    decay = np.exp(-reservoir.leaks)
    weights = reservoir.weight_matrix
    out_idx = reservoir.output_neurons

    ext = np.zeros((duration, b, n), dtype=bool)
    channel_neurons = reservoir.input_map[: examples[0].shape[1]]
    for k, ex in enumerate(examples):
        ext[:, k, channel_neurons] = ex

    v = v0.copy()
    refr = np.zeros((b, n), dtype=np.int32)
    prev = np.zeros((b, n))
    out_raster = np.zeros((duration, b, out_idx.size), dtype=bool)

    for t in range(duration):
        v *= decay
        active = refr == 0
        drive = ext[t] * amp + prev @ weights
        v += np.where(active, drive, 0.0)
        fired = active & (v >= theta)
        v[fired] = 0.0
        refr[~active] -= 1
        refr[fired] = t_ref
        prev = fired.astype(float)
        out_raster[t] = fired[:, out_idx]

    recordings = []
    for k in range(b):
        spikes = [np.nonzero(out_raster[:, k, j])[0] for j in range(out_idx.size)]
        recordings.append(ReservoirRecording(duration=duration, spikes=spikes))
    return recordings


def run_example_batch(
    reservoir: ReservoirInstance, batch: SpikeTrainBatch, reset: str, seed
) -> list[ReservoirRecording]:
    """Simulate every example of a batch independently.

    Reset potentials are drawn per original example index, so each example's
    recording is unaffected by the presence or order of the others."""
    if batch.n_channels > reservoir.input_map.size:
        raise DynamicsError(
            f"batch has {batch.n_channels} channels but only "
            f"{reservoir.input_map.size} input neurons are mapped"
        )
    for i in range(len(batch)):
        if batch.duration(i) == 0:
            raise DynamicsError(f"example {i} has zero duration")
    v0_all = _initial_potentials(reservoir, len(batch), reset, seed)

    # Group equal-duration examples so they can share one stepping loop.
    by_duration: dict[int, list[int]] = {}
    for i in range(len(batch)):
        by_duration.setdefault(batch.duration(i), []).append(i)

    results: list[ReservoirRecording | None] = [None] * len(batch)
    for duration, idxs in by_duration.items():
        recs = _simulate_group(
            reservoir, [batch.examples[i] for i in idxs], v0_all[idxs]
        )
        for i, rec in zip(idxs, recs):
            results[i] = rec
    return results  # type: ignore[return-value]


def simulate(
    reservoir: ReservoirInstance, example: np.ndarray, reset: str, seed
) -> ReservoirRecording:
    """Simulate a single (T, n_channels) example."""
    batch = SpikeTrainBatch(examples=[np.asarray(example, dtype=bool)],
                            n_channels=example.shape[1])
    return run_example_batch(reservoir, batch, reset, seed)[0]
