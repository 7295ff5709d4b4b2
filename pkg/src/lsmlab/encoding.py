"""Spike-train encodings of binary images and videos, plus input-neuron
assignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KIND_RATE = "rate"
KIND_FRAME = "frame"


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class EncodingSpec:
    kind: str
    duration: int = 100  # rate coding only; frame coding takes T from the video
    spike_prob: float = 0.25  # per-step firing probability of an active pixel
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (KIND_RATE, KIND_FRAME):
            raise EncodingError(f"unknown encoding kind: {self.kind!r}")
        if self.duration < 1:
            raise EncodingError("duration must be >= 1")
        if not 0 < self.spike_prob <= 1:
            raise EncodingError("spike_prob must lie in (0, 1]")


@dataclass(frozen=True)
class SpikeTrainBatch:
    """Per-example spike trains, one channel per pixel.

    Each example is a (T, n_channels) boolean array; True at (t, c) means
    channel c spikes at step t.
    """

    examples: list[np.ndarray]
    n_channels: int

    def __post_init__(self):
        for ex in self.examples:
            if ex.ndim != 2 or ex.shape[1] != self.n_channels:
                raise EncodingError("every example must be (T, n_channels)")
            if ex.dtype != np.bool_:
                raise EncodingError("spike arrays must be boolean")

    def __len__(self) -> int:
        return len(self.examples)

    def duration(self, i: int) -> int:
        return int(self.examples[i].shape[0])

    def channel_times(self, i: int, channel: int) -> np.ndarray:
        """Sorted spike times of one channel of one example."""
        return np.nonzero(self.examples[i][:, channel])[0]


def encode_rate(images: np.ndarray, spec: EncodingSpec) -> SpikeTrainBatch:
    """Bernoulli rate coding: each active pixel spikes with spike_prob per step."""
    if spec.kind != KIND_RATE:
        raise EncodingError("spec.kind must be rate")
    imgs = np.asarray(images)
    if not np.isin(imgs, (0, 1)).all():
        raise EncodingError("images must be binary")
    flat = imgs.reshape(imgs.shape[0], -1).astype(bool)
    n_channels = flat.shape[1]
    examples = []
    # Per-example substreams: example i's train is independent of batch size
    # and of the other examples.
    for i, active in enumerate(flat):
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(i,)))
        draws = rng.random((spec.duration, n_channels)) < spec.spike_prob
        examples.append(draws & active[None, :])
    return SpikeTrainBatch(examples=examples, n_channels=n_channels)


def encode_frames(videos: np.ndarray, spec: EncodingSpec) -> SpikeTrainBatch:
    """Binary frame coding: a channel spikes at t iff its pixel is on in frame t."""
    if spec.kind != KIND_FRAME:
        raise EncodingError("spec.kind must be frame")
    vids = np.asarray(videos)
    if vids.ndim != 4:
        raise EncodingError("videos must be (n, frames, h, w)")
    if not np.isin(vids, (0, 1)).all():
        raise EncodingError("videos must be binary")
    n, t = vids.shape[0], vids.shape[1]
    flat = vids.reshape(n, t, -1).astype(bool)
    return SpikeTrainBatch(examples=[flat[i] for i in range(n)], n_channels=flat.shape[2])


def decode_frames(batch: SpikeTrainBatch, height: int, width: int) -> np.ndarray:
    """Inverse of encode_frames (round-trip check and debugging)."""
    return np.stack(
        [ex.reshape(ex.shape[0], height, width).astype(np.uint8) for ex in batch.examples]
    )


def assign_inputs(
    n_channels: int, n_neurons: int, output_neurons: np.ndarray, seed
) -> np.ndarray:
    """Injective channel -> neuron map avoiding the output set, uniform over
    valid assignments."""
    outputs = np.asarray(output_neurons, dtype=np.int64)
    free = np.setdiff1d(np.arange(n_neurons), outputs)
    if n_channels > free.size:
        raise EncodingError(
            f"{n_channels} channels do not fit into {free.size} non-output neurons"
        )
    rng = np.random.default_rng(seed)
    return rng.choice(free, size=n_channels, replace=False)
