"""Experiment orchestration: configs, trials, hyperparameter sweeps,
equivalence experiments, and result persistence."""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__, datasets, dynamics, encoding, features, meanfield, readout, robustness, seeds, topology

TASK_MNIST = "mnist"
TASK_BALLS = "ball_trajectories"

SWEEP_PARAMS = ("beta", "theta", "input")

FEATURE_FAMILIES = ("statistical", "trace")
READOUT_KINDS = (readout.READOUT_SLP, readout.READOUT_FOREST)

CURVES_HEADER = [
    "trial_id", "task", "reset", "feature_family", "readout", "metric",
    "swept_param", "level", "w", "mean", "std",
]
ROBUSTNESS_HEADER = [
    "trial_id", "task", "reset", "feature_family", "readout", "metric",
    "swept_param", "level", "gamma", "w_min", "w_max", "delta",
    "w_crit", "contains_crit", "midpoint_below_crit",
]


class ConfigError(ValueError):
    pass


def _take(raw: dict, allowed: set[str], context: str) -> None:
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {context}: {sorted(unknown)}")


@dataclass(frozen=True)
class MnistSource:
    images_path: str
    labels_path: str
    n_examples: int = 6000
    binarize_threshold: int = 128


@dataclass(frozen=True)
class WGridSpec:
    kind: str  # "crit_anchored" | "explicit"
    points: int = 40
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("crit_anchored", "explicit"):
            raise ConfigError(f"unknown w_grid kind: {self.kind!r}")
        if self.kind == "explicit" and len(self.values) < 1:
            raise ConfigError("explicit w_grid needs values")


@dataclass(frozen=True)
class FeatureSettings:
    statistical_neurons: int = 50
    count_var_bin: int = 10
    trace_neurons: int = 200
    tau: float = 60.0


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    reset: str
    topology: dict  # n_neurons, beta, rewiring_prob, family
    neuron: dynamics.NeuronParams
    weight_cv: float
    leak: dynamics.LeakSpec
    encoding: encoding.EncodingSpec
    features: FeatureSettings
    slp: readout.SlpParams
    forest: readout.ForestParams
    w_grid: WGridSpec
    gamma: float
    master_seed: int
    dataset: object  # MnistSource or datasets.BallGenSpec
    sweeps: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    repeat_reference: bool = True
    cv_folds: int = 10

    def meanfield_config(self, beta=None, theta=None, input_amplitude=None) -> meanfield.MeanFieldConfig:
        return meanfield.MeanFieldConfig(
            theta=self.neuron.theta if theta is None else theta,
            input_amplitude=(
                self.neuron.input_amplitude if input_amplitude is None else input_amplitude
            ),
            t_ref=self.neuron.t_ref,
            beta=self.topology["beta"] if beta is None else beta,
            n_neurons=self.topology["n_neurons"],
        )

    def with_overrides(self, beta=None, theta=None, input_amplitude=None) -> "ExperimentConfig":
        topo = dict(self.topology)
        if beta is not None:
            topo["beta"] = beta
        neuron = dynamics.NeuronParams(
            theta=self.neuron.theta if theta is None else theta,
            t_ref=self.neuron.t_ref,
            input_amplitude=(
                self.neuron.input_amplitude if input_amplitude is None else input_amplitude
            ),
        )
        fields = asdict_config(self)
        fields["topology"] = topo
        fields["neuron"] = neuron
        fields["dataset"] = self.dataset
        fields["leak"] = self.leak
        fields["encoding"] = self.encoding
        fields["features"] = self.features
        fields["slp"] = self.slp
        fields["forest"] = self.forest
        fields["w_grid"] = self.w_grid
        return ExperimentConfig(**fields)


def asdict_config(cfg: ExperimentConfig) -> dict:
    return {
        "task": cfg.task,
        "reset": cfg.reset,
        "topology": dict(cfg.topology),
        "neuron": cfg.neuron,
        "weight_cv": cfg.weight_cv,
        "leak": cfg.leak,
        "encoding": cfg.encoding,
        "features": cfg.features,
        "slp": cfg.slp,
        "forest": cfg.forest,
        "w_grid": cfg.w_grid,
        "gamma": cfg.gamma,
        "master_seed": cfg.master_seed,
        "dataset": cfg.dataset,
        "sweeps": dict(cfg.sweeps),
        "repeat_reference": cfg.repeat_reference,
        "cv_folds": cfg.cv_folds,
    }


def config_to_json_dict(cfg: ExperimentConfig) -> dict:
    out = asdict_config(cfg)
    out["neuron"] = asdict(cfg.neuron)
    out["leak"] = asdict(cfg.leak)
    out["encoding"] = asdict(cfg.encoding)
    out["features"] = {
        "statistical": {"n_output_neurons": cfg.features.statistical_neurons,
                        "count_var_bin": cfg.features.count_var_bin},
        "trace": {"n_output_neurons": cfg.features.trace_neurons,
                  "tau": cfg.features.tau},
    }
    out["readouts"] = {"slp": asdict(cfg.slp), "forest": asdict(cfg.forest)}
    del out["slp"], out["forest"]
    out["w_grid"] = {k: v for k, v in asdict(cfg.w_grid).items() if v != ()}
    if isinstance(cfg.dataset, MnistSource):
        out["dataset"] = {"mnist": asdict(cfg.dataset)}
    else:
        out["dataset"] = {"balls": asdict(cfg.dataset)}
    return out


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a parsed JSON document.

    Unknown keys anywhere in the document are rejected."""
    _take(raw, {
        "task", "reset", "topology", "neuron", "weight_cv", "leak", "encoding",
        "features", "readouts", "w_grid", "gamma", "master_seed", "dataset",
        "sweeps", "repeat_reference", "cv_folds",
    }, "config")
    if raw.get("task") not in (TASK_MNIST, TASK_BALLS):
        raise ConfigError(f"task must be {TASK_MNIST!r} or {TASK_BALLS!r}")
    if raw.get("reset") not in (dynamics.RESET_FIXED, dynamics.RESET_REDRAWN):
        raise ConfigError("reset must be 'fixed' or 'redrawn'")

    topo = dict(raw["topology"])
    _take(topo, {"n_neurons", "beta", "rewiring_prob", "family"}, "topology")

    neuron_raw = dict(raw["neuron"])
    _take(neuron_raw, {"theta", "t_ref", "input_amplitude"}, "neuron")
    neuron = dynamics.NeuronParams(**neuron_raw)

    leak_raw = dict(raw.get("leak", {}))
    _take(leak_raw, {"mean_leak", "leak_cv"}, "leak")
    leak = dynamics.LeakSpec(**leak_raw)

    enc_raw = dict(raw["encoding"])
    _take(enc_raw, {"kind", "duration", "spike_prob", "seed"}, "encoding")
    enc = encoding.EncodingSpec(**enc_raw)

    feat_raw = dict(raw.get("features", {}))
    _take(feat_raw, {"statistical", "trace"}, "features")
    stat_raw = dict(feat_raw.get("statistical", {}))
    _take(stat_raw, {"n_output_neurons", "count_var_bin"}, "features.statistical")
    trace_raw = dict(feat_raw.get("trace", {}))
    _take(trace_raw, {"n_output_neurons", "tau"}, "features.trace")
    feats = FeatureSettings(
        statistical_neurons=stat_raw.get("n_output_neurons", 50),
        count_var_bin=stat_raw.get("count_var_bin", 10),
        trace_neurons=trace_raw.get("n_output_neurons", 200),
        tau=trace_raw.get("tau", 60.0),
    )

    readouts_raw = dict(raw.get("readouts", {}))
    _take(readouts_raw, {"slp", "forest"}, "readouts")
    slp_raw = dict(readouts_raw.get("slp", {}))
    _take(slp_raw, {"learning_rate", "epochs", "batch_size", "l2"}, "readouts.slp")
    forest_raw = dict(readouts_raw.get("forest", {}))
    _take(forest_raw, {"n_trees", "min_split", "bootstrap"}, "readouts.forest")

    grid_raw = dict(raw["w_grid"])
    _take(grid_raw, {"kind", "points", "values"}, "w_grid")
    if "values" in grid_raw:
        grid_raw["values"] = tuple(grid_raw["values"])
    w_grid = WGridSpec(**grid_raw)

    ds_raw = dict(raw["dataset"])
    _take(ds_raw, {"mnist", "balls"}, "dataset")
    if ("mnist" in ds_raw) == ("balls" in ds_raw):
        raise ConfigError("dataset must specify exactly one of 'mnist' or 'balls'")
    if "mnist" in ds_raw:
        m = dict(ds_raw["mnist"])
        _take(m, {"images_path", "labels_path", "n_examples", "binarize_threshold"}, "dataset.mnist")
        dataset = MnistSource(**m)
    else:
        b = dict(ds_raw["balls"])
        _take(b, {
            "n_videos", "radius_range", "speed_range", "orbit_radius_range",
            "position_noise_sd", "jitter_halfwidth", "background_flip_prob", "seed",
        }, "dataset.balls")
        for key in ("radius_range", "speed_range", "orbit_radius_range"):
            if key in b:
                b[key] = tuple(b[key])
        dataset = datasets.BallGenSpec(**b)

    sweeps_raw = dict(raw.get("sweeps", {}))
    _take(sweeps_raw, set(SWEEP_PARAMS), "sweeps")
    sweeps = {}
    for param, levels in sweeps_raw.items():
        if len(levels) != 3 or len(set(levels)) != 3:
            raise ConfigError(f"sweeps.{param} must hold 3 distinct levels")
        sweeps[param] = tuple(float(x) for x in levels)

    return ExperimentConfig(
        task=raw["task"],
        reset=raw["reset"],
        topology=topo,
        neuron=neuron,
        weight_cv=float(raw["weight_cv"]),
        leak=leak,
        encoding=enc,
        features=feats,
        slp=readout.SlpParams(**slp_raw),
        forest=readout.ForestParams(**forest_raw),
        w_grid=w_grid,
        gamma=float(raw.get("gamma", robustness.DEFAULT_GAMMA)),
        master_seed=int(raw["master_seed"]),
        dataset=dataset,
        sweeps=sweeps,
        repeat_reference=bool(raw.get("repeat_reference", True)),
        cv_folds=int(raw.get("cv_folds", 10)),
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# data loading and encoding


def load_task_data(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray, str]:
    """(raw pixel arrays, labels, content digest) for the configured task."""
    if cfg.task == TASK_MNIST:
        src = cfg.dataset
        image_set = datasets.load_mnist(
            src.images_path, src.labels_path, src.n_examples,
            binarize_threshold=src.binarize_threshold,
            seed=seeds.seed_for(cfg.master_seed, seeds.DATASET),
        )
        digest = datasets.dataset_digest(image_set.images, image_set.labels)
        return image_set.images, image_set.labels, digest
    video_set = datasets.generate_ball_videos(cfg.dataset)
    digest = datasets.dataset_digest(video_set.videos, video_set.labels)
    return video_set.videos, video_set.labels, digest


def encode_task_data(cfg: ExperimentConfig, data: np.ndarray) -> encoding.SpikeTrainBatch:
    enc_seed = seeds.seed_for(cfg.master_seed, seeds.ENCODING)
    spec = encoding.EncodingSpec(
        kind=cfg.encoding.kind,
        duration=cfg.encoding.duration,
        spike_prob=cfg.encoding.spike_prob,
        seed=int(enc_seed.generate_state(1)[0]),
    )
    if spec.kind == encoding.KIND_RATE:
        return encoding.encode_rate(data, spec)
    return encoding.encode_frames(data, spec)


def resolve_w_grid(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.w_grid.kind == "explicit":
        return np.asarray(cfg.w_grid.values, dtype=float)
    return meanfield.crit_anchored_grid(cfg.meanfield_config(), cfg.w_grid.points)


def _feature_specs(cfg: ExperimentConfig) -> dict[str, features.FeatureSpec]:
    stat_family = (
        features.FAMILY_STATISTICAL_MNIST if cfg.task == TASK_MNIST
        else features.FAMILY_STATISTICAL_BALLS
    )
    return {
        "statistical": features.FeatureSpec(
            family=stat_family,
            n_output_neurons=cfg.features.statistical_neurons,
            count_var_bin=cfg.features.count_var_bin,
        ),
        "trace": features.FeatureSpec(
            family=features.FAMILY_TRACE,
            n_output_neurons=cfg.features.trace_neurons,
            tau=cfg.features.tau,
        ),
    }


# ---------------------------------------------------------------------------
# trials


@dataclass(frozen=True)
class TrialResult:
    trial_id: str
    task: str
    reset: str
    swept_param: str
    level: float
    w_grid: np.ndarray
    # (family, readout, metric) -> (mean per w, std per w)
    curves: dict[tuple[str, str, str], tuple[np.ndarray, np.ndarray]]
    connectivity_digest: str
    w_crit: float
    runtime_s: float

    def performance_curve(self, family: str, kind: str, metric: str) -> robustness.PerformanceCurve:
        mean, std = self.curves[(family, kind, metric)]
        return robustness.PerformanceCurve(
            w_grid=self.w_grid, mean=mean, std=std, metric=metric,
            provenance={
                "trial_id": self.trial_id, "feature_family": family, "readout": kind,
                "swept_param": self.swept_param, "level": self.level,
            },
        )


def run_trial(
    cfg: ExperimentConfig,
    batch: encoding.SpikeTrainBatch,
    labels: np.ndarray,
    w_grid: np.ndarray,
    trial_key: tuple[int, ...],
    trial_id: str,
) -> TrialResult:
    """One network instance swept over the full w grid.

    Connectivity, leaks, and neuron roles are fixed for the trial; synaptic
    weights are resampled at each grid point."""
    t0 = time.monotonic()
    n_neurons = cfg.topology["n_neurons"]
    topo_seed = seeds.seed_for(cfg.master_seed, seeds.TOPOLOGY, *trial_key)
    spec = topology.TopologySpec(
        n_neurons=n_neurons,
        beta=cfg.topology["beta"],
        rewiring_prob=cfg.topology["rewiring_prob"],
        family=cfg.topology["family"],
        seed=int(topo_seed.generate_state(1)[0]),
    )
    graph = topology.generate(spec)
    digest = hashlib.sha256()
    digest.update(graph.pre.tobytes())
    digest.update(graph.post.tobytes())
    conn_digest = digest.hexdigest()[:16]

    n_outputs = max(cfg.features.statistical_neurons, cfg.features.trace_neurons)
    base = dynamics.instantiate_reservoir(
        graph,
        dynamics.SynapseSpec(mean_weight=float(w_grid[0]), weight_cv=cfg.weight_cv),
        cfg.leak,
        cfg.neuron,
        n_inputs=batch.n_channels,
        n_outputs=n_outputs,
        seed=seeds.seed_for(cfg.master_seed, seeds.LEAKS, *trial_key),
    )

    specs = _feature_specs(cfg)
    readout_specs = {
        readout.READOUT_SLP: readout.ReadoutSpec(kind=readout.READOUT_SLP, slp=cfg.slp),
        readout.READOUT_FOREST: readout.ReadoutSpec(kind=readout.READOUT_FOREST, forest=cfg.forest),
    }

    acc: dict[tuple[str, str, str], list[tuple[float, float]]] = {
        (fam, kind, metric): []
        for fam in FEATURE_FAMILIES
        for kind in READOUT_KINDS
        for metric in readout.METRIC_NAMES
    }
    for wi, w in enumerate(w_grid):
        reservoir = dynamics.resample_weights(
            base,
            dynamics.SynapseSpec(mean_weight=float(w), weight_cv=cfg.weight_cv),
            seeds.seed_for(cfg.master_seed, seeds.WEIGHTS, *trial_key, wi),
        )
        recordings = dynamics.run_example_batch(
            reservoir, batch, cfg.reset,
            seeds.seed_for(cfg.master_seed, seeds.RESET, *trial_key, wi),
        )
        for fi, fam in enumerate(FEATURE_FAMILIES):
            matrix = features.extract(recordings, specs[fam])
            for ri, kind in enumerate(READOUT_KINDS):
                report = readout.cross_validate(
                    matrix.values, labels, readout_specs[kind],
                    seed=seeds.seed_for(cfg.master_seed, seeds.FOLDS, *trial_key, wi, fi, ri),
                    k=cfg.cv_folds,
                )
                for metric in readout.METRIC_NAMES:
                    acc[(fam, kind, metric)].append((report.mean[metric], report.std[metric]))

    curves = {
        key: (np.array([m for m, _ in vals]), np.array([s for _, s in vals]))
        for key, vals in acc.items()
    }
    return TrialResult(
        trial_id=trial_id,
        task=cfg.task,
        reset=cfg.reset,
        swept_param="",
        level=float("nan"),
        w_grid=np.asarray(w_grid, dtype=float),
        curves=curves,
        connectivity_digest=conn_digest,
        w_crit=meanfield.w_critical(cfg.meanfield_config()),
        runtime_s=time.monotonic() - t0,
    )


def _tag_trial(result: TrialResult, swept_param: str, level: float) -> TrialResult:
    return TrialResult(
        trial_id=result.trial_id,
        task=result.task,
        reset=result.reset,
        swept_param=swept_param,
        level=level,
        w_grid=result.w_grid,
        curves=result.curves,
        connectivity_digest=result.connectivity_digest,
        w_crit=result.w_crit,
        runtime_s=result.runtime_s,
    )


def _level_config(cfg: ExperimentConfig, param: str, level: float) -> ExperimentConfig:
    if param == "beta":
        return cfg.with_overrides(beta=level)
    if param == "theta":
        return cfg.with_overrides(theta=level)
    if param == "input":
        return cfg.with_overrides(input_amplitude=level)
    raise ConfigError(f"unknown sweep parameter: {param!r}")


_SWEEP_TAG = {"beta": 0, "theta": 1, "input": 2}


def _run_level(args) -> tuple[int, TrialResult | str]:
    cfg, batch, labels, param, level_idx, level, grid = args
    trial_key = (seeds.TRIAL, _SWEEP_TAG[param], level_idx)
    trial_id = f"{param}-{level_idx}"
    try:
        level_cfg = _level_config(cfg, param, level)
        result = run_trial(level_cfg, batch, labels, grid, trial_key, trial_id)
    except Exception as exc:  # propagate as marked failure, run other levels
        return level_idx, f"{type(exc).__name__}: {exc}"
    return level_idx, _tag_trial(result, param, level)


@dataclass(frozen=True)
class SweepResult:
    param: str
    levels: tuple[float, ...]
    trials: list[TrialResult | None]
    failures: dict[int, str]
    dataset_digest: str


def run_sweep(cfg: ExperimentConfig, param: str, jobs: int = 1) -> SweepResult:
    """One trial per sweep level of the chosen hyperparameter.

    All levels share one w grid, resolved from the base config, so the
    resulting curves and robustness intervals are comparable on a common
    weight axis."""
    if param not in cfg.sweeps:
        raise ConfigError(f"config has no sweep levels for {param!r}")
    levels = cfg.sweeps[param]
    grid = resolve_w_grid(cfg)
    data, labels, digest = load_task_data(cfg)
    batch = encode_task_data(cfg, data)
    jobs_args = [(cfg, batch, labels, param, i, lvl, grid)
                 for i, lvl in enumerate(levels)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_level, jobs_args))
    else:
        outcomes = [_run_level(a) for a in jobs_args]
    trials: list[TrialResult | None] = [None] * len(levels)
    failures: dict[int, str] = {}
    for idx, outcome in sorted(outcomes):
        if isinstance(outcome, str):
            failures[idx] = outcome
        else:
            trials[idx] = outcome
    return SweepResult(param=param, levels=levels, trials=trials, failures=failures,
                       dataset_digest=digest)


@dataclass(frozen=True)
class EquivalenceResult:
    beta_alt: float
    theta_eq: float
    w_crit: float
    # (family, readout, metric) -> d_norm between the two equivalent-arm curves
    equivalent_dnorm: dict[tuple[str, str, str], float]
    # same cells, between two independent repeats of the beta_alt arm
    baseline_dnorm: dict[tuple[str, str, str], float]
    trials: dict[str, TrialResult]
    dataset_digest: str

    @property
    def mean_equivalent_dnorm(self) -> float:
        return float(np.nanmean(list(self.equivalent_dnorm.values())))

    @property
    def mean_baseline_dnorm(self) -> float:
        return float(np.nanmean(list(self.baseline_dnorm.values())))


def _dnorm_between(a: TrialResult, b: TrialResult) -> dict[tuple[str, str, str], float]:
    # Cells whose curve never rises above zero (possible for the correlation
    # metric at chance-level performance) cannot be max-normalized; they are
    # recorded as NaN and excluded from the means.
    out = {}
    for key in a.curves:
        ca = meanfield.RateCurve(a.w_grid, a.curves[key][0])
        cb = meanfield.RateCurve(b.w_grid, b.curves[key][0])
        try:
            out[key] = meanfield.curve_distance(ca, cb, normalize=True)
        except meanfield.MeanFieldError:
            out[key] = float("nan")
    return out


def _equiv_job(item) -> tuple[str, TrialResult]:
    name, cfg, key, batch, labels, grid = item
    return name, run_trial(cfg, batch, labels, grid, key, f"equiv-{name}")


def equivalence_experiment(cfg: ExperimentConfig, beta_alt: float, jobs: int = 1) -> EquivalenceResult:
    """Paired trials at (beta_alt, theta_ref) and (beta_ref, theta_eq), plus a
    repeat-trial variability baseline on the beta_alt arm."""
    mf_ref = cfg.meanfield_config()
    theta_eq = meanfield.theta_equivalent(mf_ref, beta_alt)
    if theta_eq <= 0:
        raise ConfigError(f"equivalent threshold {theta_eq} is non-physical")
    cfg_alt = cfg.with_overrides(beta=beta_alt)
    cfg_eq = cfg.with_overrides(theta=theta_eq)
    w_crit = meanfield.w_critical(cfg_alt.meanfield_config())
    if w_crit <= 0:
        raise ConfigError("equivalence experiment needs a positive critical weight")
    grid = meanfield.crit_anchored_grid(cfg_alt.meanfield_config(), cfg.w_grid.points)

    data, labels, digest = load_task_data(cfg)
    batch = encode_task_data(cfg, data)

    plan = [
        ("alt", cfg_alt, (seeds.TRIAL, 100), batch, labels, grid),
        ("eq", cfg_eq, (seeds.TRIAL, 101), batch, labels, grid),
        ("alt_repeat_a", cfg_alt, (seeds.TRIAL, 102), batch, labels, grid),
        ("alt_repeat_b", cfg_alt, (seeds.TRIAL, 103), batch, labels, grid),
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_equiv_job, plan))
    else:
        results = dict(_equiv_job(item) for item in plan)

    return EquivalenceResult(
        beta_alt=beta_alt,
        theta_eq=theta_eq,
        w_crit=w_crit,
        equivalent_dnorm=_dnorm_between(results["alt"], results["eq"]),
        baseline_dnorm=_dnorm_between(results["alt_repeat_a"], results["alt_repeat_b"]),
        trials=results,
        dataset_digest=digest,
    )


# ---------------------------------------------------------------------------
# persistence


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def emit_results(
    cfg: ExperimentConfig,
    sweep_results: list[SweepResult],
    out_dir,
    gamma: float | None = None,
) -> dict[str, Path]:
    """Write curves.csv, robustness.csv, and run.json into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gamma = cfg.gamma if gamma is None else gamma

    curve_rows: list[list] = []
    robust_rows: list[list] = []
    for sweep in sweep_results:
        for trial in sweep.trials:
            if trial is None:
                continue
            for (fam, kind, metric), (mean, std) in sorted(trial.curves.items()):
                for wi, w in enumerate(trial.w_grid):
                    curve_rows.append([
                        trial.trial_id, trial.task, trial.reset, fam, kind, metric,
                        trial.swept_param, trial.level, float(w),
                        float(mean[wi]), float(std[wi]),
                    ])
                curve = trial.performance_curve(fam, kind, metric)
                w_crit = trial.w_crit if trial.w_crit > 0 else None
                try:
                    rep = robustness.robustness_interval(curve, gamma=gamma,
                                                         w_crit=w_crit)
                    interval = [rep.gamma, rep.w_min, rep.w_max, rep.delta,
                                trial.w_crit,
                                "" if rep.contains_crit is None else rep.contains_crit,
                                "" if rep.midpoint_below_crit is None
                                else rep.midpoint_below_crit]
                except robustness.RobustnessError:
                    # undefined interval (non-positive curve peak)
                    nan = float("nan")
                    interval = [gamma, nan, nan, nan, trial.w_crit, "", ""]
                robust_rows.append([
                    trial.trial_id, trial.task, trial.reset, fam, kind, metric,
                    trial.swept_param, trial.level, *interval,
                ])

    paths = {
        "curves": out / "curves.csv",
        "robustness": out / "robustness.csv",
        "run": out / "run.json",
    }
    _write_csv(paths["curves"], CURVES_HEADER, curve_rows)
    _write_csv(paths["robustness"], ROBUSTNESS_HEADER, robust_rows)

    run_doc = {
        "version": __version__,
        "config": config_to_json_dict(cfg),
        "master_seed": cfg.master_seed,
        "dataset_digests": sorted({s.dataset_digest for s in sweep_results}),
        "sweeps": [
            {
                "param": s.param,
                "levels": list(s.levels),
                "failures": {str(k): v for k, v in s.failures.items()},
                "trials": [
                    None if t is None else {
                        "trial_id": t.trial_id,
                        "connectivity_digest": t.connectivity_digest,
                        "w_crit": format(t.w_crit, ".17g"),
                    }
                    for t in s.trials
                ],
            }
            for s in sweep_results
        ],
    }
    paths["run"].write_text(json.dumps(run_doc, indent=2, sort_keys=True) + "\n")
    return paths
