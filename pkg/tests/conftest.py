"""Shared fixtures: synthetic digit IDX files and desk-scale configurations."""

import numpy as np
import pytest

import _report
from _digits import make_pooled_digit_images

from lsmlab import datasets, dynamics, encoding, orchestrator, readout


@pytest.fixture(scope="session")
def digit_idx_paths(tmp_path_factory):
    """IDX image/label files with 1000 pooled (14x14) synthetic digit glyphs."""
    root = tmp_path_factory.mktemp("digits")
    images, labels = make_pooled_digit_images(1000, seed=2024)
    image_path = root / "images.idx"
    label_path = root / "labels.idx"
    datasets.write_idx_images(image_path, images)
    datasets.write_idx_labels(label_path, labels)
    return str(image_path), str(label_path)


def desk_config(digit_idx_paths, master_seed=101, **overrides):
    """Desk-scale MNIST-style experiment configuration.

    N = 300 with 14x14 inputs (196 channels), a positive critical weight
    (theta = 2, I = 0.1, T_ref = 3), and readouts sized for serial runtime.
    """
    images_path, labels_path = digit_idx_paths
    fields = dict(
        task=orchestrator.TASK_MNIST,
        reset=dynamics.RESET_REDRAWN,
        topology={"n_neurons": 300, "beta": 0.2, "rewiring_prob": 0.2,
                  "family": "watts_strogatz"},
        neuron=dynamics.NeuronParams(theta=2.0, t_ref=3, input_amplitude=0.1),
        weight_cv=10.0,
        leak=dynamics.LeakSpec(),
        encoding=encoding.EncodingSpec(kind="rate", duration=100, spike_prob=1.0),
        features=orchestrator.FeatureSettings(
            statistical_neurons=50, count_var_bin=10, trace_neurons=100, tau=60.0
        ),
        slp=readout.SlpParams(epochs=60),
        forest=readout.ForestParams(n_trees=50),
        w_grid=orchestrator.WGridSpec(kind="crit_anchored", points=15),
        gamma=0.85,
        master_seed=master_seed,
        dataset=orchestrator.MnistSource(images_path, labels_path, n_examples=600),
        sweeps={"beta": (0.2, 0.3, 0.4), "theta": (1.1, 1.5, 2.0),
                "input": (0.05, 0.1, 0.15)},
    )
    fields.update(overrides)
    return orchestrator.ExperimentConfig(**fields)


def tiny_config(digit_idx_paths, master_seed=7, **overrides):
    """Minimal end-to-end configuration for fast orchestrator/CLI tests.

    N = 80 with 7x7 inputs would need separate data; instead keep the 14x14
    files and shrink everything else (examples, duration, grid, readouts).
    """
    defaults = dict(
        topology={"n_neurons": 250, "beta": 0.1, "rewiring_prob": 0.2,
                  "family": "watts_strogatz"},
        encoding=encoding.EncodingSpec(kind="rate", duration=20, spike_prob=1.0),
        features=orchestrator.FeatureSettings(
            statistical_neurons=10, count_var_bin=5, trace_neurons=20, tau=10.0
        ),
        slp=readout.SlpParams(epochs=5),
        forest=readout.ForestParams(n_trees=5),
        w_grid=orchestrator.WGridSpec(kind="explicit",
                                      values=(0.005, 0.02, 0.05)),
        dataset=orchestrator.MnistSource(
            digit_idx_paths[0], digit_idx_paths[1], n_examples=120
        ),
        sweeps={"beta": (0.1, 0.15, 0.2), "theta": (1.5, 2.0, 2.5),
                "input": (0.05, 0.1, 0.15)},
    )
    defaults.update(overrides)
    return desk_config(digit_idx_paths, master_seed=master_seed, **defaults)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _report.lines:
        terminalreporter.section("acceptance criteria")
        for line in _report.lines:
            terminalreporter.write_line(line)
