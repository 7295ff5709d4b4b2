"""Labeled datasets: binarized MNIST ingestion (IDX format) and the synthetic
ball-trajectory video generator."""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

IDX_IMAGES_MAGIC = 2051
IDX_LABELS_MAGIC = 2049

BALL_CLASSES = (
    "horizontal_linear",
    "vertical_linear",
    "diagonal_linear_down",
    "diagonal_linear_up",
    "circular_cw",
    "circular_ccw",
    "random_walk",
)
N_BALL_CLASSES = len(BALL_CLASSES)
BALL_FRAME_SIZE = 32
BALL_N_FRAMES = 100


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledImageSet:
    images: np.ndarray  # (n, 28, 28) uint8 in {0, 1}
    labels: np.ndarray  # (n,) in 0..9
    provenance: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BallGenSpec:
    n_videos: int = 700
    radius_range: tuple[float, float] = (2.0, 4.0)
    speed_range: tuple[float, float] = (0.5, 2.0)
    orbit_radius_range: tuple[float, float] = (6.0, 12.0)
    position_noise_sd: float = 0.5
    jitter_halfwidth: float = 0.5
    background_flip_prob: float = 0.005
    seed: int = 0

    def __post_init__(self):
        for lo, hi in (self.radius_range, self.speed_range, self.orbit_radius_range):
            if lo <= 0 or hi < lo:
                raise DatasetError("ranges must be positive with lo <= hi")
        if self.position_noise_sd < 0 or self.jitter_halfwidth < 0:
            raise DatasetError("noise magnitudes must be non-negative")
        if not 0 <= self.background_flip_prob <= 1:
            raise DatasetError("background_flip_prob must lie in [0, 1]")
        if self.n_videos < 1:
            raise DatasetError("n_videos must be >= 1")


@dataclass(frozen=True)
class BallVideoSet:
    videos: np.ndarray  # (n, 100, 32, 32) uint8 in {0, 1}
    labels: np.ndarray  # (n,) in 0..6
    spec: BallGenSpec


def _read_idx_header(data: bytes, path, expect_magic: int, n_dims: int) -> tuple[tuple[int, ...], int]:
    header_len = 4 * (1 + n_dims)
    if len(data) < header_len:
        raise DatasetError(f"{path}: truncated IDX header at byte {len(data)}")
    magic = struct.unpack(">I", data[:4])[0]
    if magic != expect_magic:
        raise DatasetError(f"{path}: bad IDX magic {magic} at byte 0, expected {expect_magic}")
    dims = struct.unpack(f">{n_dims}I", data[4:header_len])
    return dims, header_len


def read_idx_images(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (n, rows, cols), offset = _read_idx_header(data, path, IDX_IMAGES_MAGIC, 3)
    expected = n * rows * cols
    if len(data) - offset != expected:
        raise DatasetError(
            f"{path}: expected {expected} pixel bytes after byte {offset}, "
            f"found {len(data) - offset}"
        )
    return np.frombuffer(data, dtype=np.uint8, offset=offset).reshape(n, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (n,), offset = _read_idx_header(data, path, IDX_LABELS_MAGIC, 1)
    if len(data) - offset != n:
        raise DatasetError(
            f"{path}: expected {n} label bytes after byte {offset}, found {len(data) - offset}"
        )
    return np.frombuffer(data, dtype=np.uint8, offset=offset).copy()


def write_idx_images(path, images: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols))
        fh.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.size))
        fh.write(labels.tobytes())


def _stratified_subsample(labels: np.ndarray, n_examples: int, rng) -> np.ndarray:
    """Indices of a class-balanced subsample; per-class counts within +/-1 of
    n_examples / n_classes (remainders go to the lowest class ids)."""
    classes = np.unique(labels)
    base, extra = divmod(n_examples, classes.size)
    picked = []
    for rank, cls in enumerate(sorted(classes)):
        want = base + (1 if rank < extra else 0)
        pool = np.nonzero(labels == cls)[0]
        if want > pool.size:
            raise DatasetError(
                f"class {cls} has {pool.size} examples, need {want} for stratification"
            )
        picked.append(rng.choice(pool, size=want, replace=False))
    return np.sort(np.concatenate(picked))


def load_mnist(
    idx_image_path, idx_label_path, n_examples: int, binarize_threshold: int = 128, seed=0
) -> LabeledImageSet:
    """Read IDX MNIST files, binarize at the threshold, and draw a
    class-stratified subsample."""
    raw_images = read_idx_images(idx_image_path)
    labels = read_idx_labels(idx_label_path)
    if raw_images.shape[0] != labels.shape[0]:
        raise DatasetError("image and label counts differ")
    if n_examples > labels.shape[0]:
        raise DatasetError(f"requested {n_examples} examples, only {labels.shape[0]} available")
    rng = np.random.default_rng(seed)
    idx = _stratified_subsample(labels, n_examples, rng)
    binary = (raw_images[idx] >= binarize_threshold).astype(np.uint8)
    provenance = {
        "images_sha256": hashlib.sha256(Path(idx_image_path).read_bytes()).hexdigest(),
        "labels_sha256": hashlib.sha256(Path(idx_label_path).read_bytes()).hexdigest(),
        "n_examples": int(n_examples),
        "binarize_threshold": int(binarize_threshold),
    }
    return LabeledImageSet(images=binary, labels=labels[idx].astype(np.int64), provenance=provenance)


def _render_ellipse(cx: float, cy: float, rx: float, ry: float, size: int) -> np.ndarray:
    """Binary frame with a filled ellipse, toroidally wrapped.

    A pixel is on iff its center lies inside the ellipse, testing the nearest
    periodic copy of the center."""
    coords = np.arange(size, dtype=float)
    dx = coords[None, :] - cx % size
    dy = coords[:, None] - cy % size
    # shortest displacement on the torus
    dx = (dx + size / 2) % size - size / 2
    dy = (dy + size / 2) % size - size / 2
    return ((dx / rx) ** 2 + (dy / ry) ** 2 <= 1.0).astype(np.uint8)


def _trajectory(cls: int, spec: BallGenSpec, rng, n_frames: int, size: int) -> np.ndarray:
    """(n_frames, 2) noiseless center positions for one trajectory class."""
    start = rng.uniform(0, size, size=2)
    speed = rng.uniform(*spec.speed_range)
    t = np.arange(n_frames, dtype=float)
    name = BALL_CLASSES[cls]
    if name == "horizontal_linear":
        pos = np.stack([start[0] + speed * t, np.full(n_frames, start[1])], axis=1)
    elif name == "vertical_linear":
        pos = np.stack([np.full(n_frames, start[0]), start[1] + speed * t], axis=1)
    elif name == "diagonal_linear_down":
        step = speed / np.sqrt(2.0)
        pos = np.stack([start[0] + step * t, start[1] + step * t], axis=1)
    elif name == "diagonal_linear_up":
        step = speed / np.sqrt(2.0)
        pos = np.stack([start[0] + step * t, start[1] - step * t], axis=1)
    elif name in ("circular_cw", "circular_ccw"):
        orbit_r = rng.uniform(*spec.orbit_radius_range)
        omega = speed / orbit_r
        sign = 1.0 if name == "circular_ccw" else -1.0
        phase = rng.uniform(0, 2 * np.pi)
        angles = phase + sign * omega * t
        pos = np.stack(
            [start[0] + orbit_r * np.cos(angles), start[1] + orbit_r * np.sin(angles)], axis=1
        )
    else:  # random_walk
        angles = rng.uniform(0, 2 * np.pi, size=n_frames)
        steps = np.stack([np.cos(angles), np.sin(angles)], axis=1) * speed
        steps[0] = 0.0
        pos = start[None, :] + np.cumsum(steps, axis=0)
    return pos


def generate_ball_videos(spec: BallGenSpec) -> BallVideoSet:
    """Binary 32x32x100 videos of a moving ball, 7 trajectory classes.

    n_videos is split evenly over classes, remainders to the lowest class ids.
    Deterministic given spec.seed; each video has its own substream."""
    size, n_frames = BALL_FRAME_SIZE, BALL_N_FRAMES
    base, extra = divmod(spec.n_videos, N_BALL_CLASSES)
    labels = np.concatenate(
        [np.full(base + (1 if c < extra else 0), c, dtype=np.int64) for c in range(N_BALL_CLASSES)]
    )
    videos = np.zeros((spec.n_videos, n_frames, size, size), dtype=np.uint8)
    for i, cls in enumerate(labels):
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(i,)))
        rx = rng.uniform(*spec.radius_range)
        ry = rng.uniform(*spec.radius_range)
        pos = _trajectory(int(cls), spec, rng, n_frames, size)
        noise = rng.normal(0.0, spec.position_noise_sd, size=pos.shape)
        jitter = rng.uniform(-spec.jitter_halfwidth, spec.jitter_halfwidth, size=pos.shape)
        noisy = pos + noise + jitter
        flips = rng.random((n_frames, size, size)) < spec.background_flip_prob
        for t in range(n_frames):
            frame = _render_ellipse(noisy[t, 0], noisy[t, 1], rx, ry, size)
            videos[i, t] = frame ^ flips[t]
    return BallVideoSet(videos=videos, labels=labels, spec=spec)


def dataset_digest(pixels: np.ndarray, labels: np.ndarray) -> str:
    """Stable content hash over pixels and labels for provenance records."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())
    h.update(np.ascontiguousarray(labels, dtype=np.int64).tobytes())
    h.update(str(pixels.shape).encode())
    return h.hexdigest()


def save_ball_videos(path, video_set: BallVideoSet) -> None:
    """Cache file: one JSON header line (spec + digest), then packed 1-bit
    frames, little-endian bit order, frame-major."""
    header = {
        "spec": asdict(video_set.spec),
        "digest": dataset_digest(video_set.videos, video_set.labels),
        "shape": list(video_set.videos.shape),
        "labels": video_set.labels.tolist(),
    }
    packed = np.packbits(video_set.videos.reshape(-1), bitorder="little")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode())
        fh.write(b"\n")
        fh.write(packed.tobytes())


def load_ball_videos(path) -> BallVideoSet:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        packed = np.frombuffer(fh.read(), dtype=np.uint8)
    shape = tuple(header["shape"])
    n_bits = int(np.prod(shape))
    videos = np.unpackbits(packed, count=n_bits, bitorder="little").reshape(shape)
    labels = np.asarray(header["labels"], dtype=np.int64)
    spec = BallGenSpec(**{**header["spec"], "radius_range": tuple(header["spec"]["radius_range"]),
                          "speed_range": tuple(header["spec"]["speed_range"]),
                          "orbit_radius_range": tuple(header["spec"]["orbit_radius_range"])})
    loaded = BallVideoSet(videos=videos, labels=labels, spec=spec)
    if dataset_digest(videos, labels) != header["digest"]:
        raise DatasetError(f"{path}: content digest mismatch")
    return loaded
