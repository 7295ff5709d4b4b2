"""Command-line surface: topology stats, mean-field curves, dataset
generation, sweeps, equivalence experiments, and robustness reports."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import datasets, meanfield, orchestrator, robustness, topology

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lsmlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topology-stats", help="degree summary of a generated graph")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("meanfield", help="CSV of (w, isi, rate) on a weight grid")
    p.add_argument("--config", required=True)
    p.add_argument("--w-min", type=float, required=True)
    p.add_argument("--w-max", type=float, required=True)
    p.add_argument("--points", type=int, default=40)

    p = sub.add_parser("equiv", help="equivalent threshold and paired critical weights")
    p.add_argument("--config", required=True)
    p.add_argument("--beta-alt", type=float, required=True)

    p = sub.add_parser("gen-balls", help="generate and cache a ball-trajectory video set")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="run a hyperparameter sweep and write result files")
    p.add_argument("--param", choices=orchestrator.SWEEP_PARAMS, required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("equiv-exp", help="run the (beta, theta) equivalence experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--beta-alt", type=float, required=True)
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("robustness", help="robustness report from a sweep curves.csv")
    p.add_argument("--curves", required=True)
    p.add_argument("--gamma", type=float, default=robustness.DEFAULT_GAMMA)
    p.add_argument("--w-crit", type=float, default=None)
    p.add_argument("--out", default=None, help="write CSV here instead of stdout")

    return parser


def _load_config(path: str) -> orchestrator.ExperimentConfig:
    return orchestrator.load_config(path)


def _override_seed(cfg, seed):
    if seed is None:
        return cfg
    fields = orchestrator.asdict_config(cfg)
    fields["master_seed"] = int(seed)
    return orchestrator.ExperimentConfig(**fields)


def _cmd_topology_stats(args) -> int:
    cfg = _load_config(args.config)
    spec = topology.TopologySpec(
        n_neurons=cfg.topology["n_neurons"],
        beta=cfg.topology["beta"],
        rewiring_prob=cfg.topology["rewiring_prob"],
        family=cfg.topology["family"],
        seed=args.seed,
    )
    graph = topology.generate(spec)
    stats = topology.degree_stats(graph)
    print(json.dumps({
        "n_neurons": graph.n_neurons,
        "n_edges": graph.n_edges,
        "mean_in_degree": stats.mean_in,
        "min_in_degree": stats.min_in,
        "max_in_degree": stats.max_in,
        "mean_out_degree": stats.mean_out,
        "min_out_degree": stats.min_out,
        "max_out_degree": stats.max_out,
    }, indent=2))
    return EXIT_OK


def _cmd_meanfield(args) -> int:
    cfg = _load_config(args.config).meanfield_config()
    grid = np.linspace(args.w_min, args.w_max, args.points)
    isi = meanfield.isi_mean(cfg, grid)
    rate = 1.0 / isi
    print("w,isi,rate")
    for w, i, r in zip(grid, isi, rate):
        print(f"{w:.17g},{i:.17g},{r:.17g}")
    return EXIT_OK


def _cmd_equiv(args) -> int:
    mf = _load_config(args.config).meanfield_config()
    theta_eq = meanfield.theta_equivalent(mf, args.beta_alt)
    alt = meanfield.MeanFieldConfig(
        theta=mf.theta, input_amplitude=mf.input_amplitude, t_ref=mf.t_ref,
        beta=args.beta_alt, n_neurons=mf.n_neurons,
    )
    eq = meanfield.MeanFieldConfig(
        theta=theta_eq, input_amplitude=mf.input_amplitude, t_ref=mf.t_ref,
        beta=mf.beta, n_neurons=mf.n_neurons,
    )
    print(json.dumps({
        "theta_eq": theta_eq,
        "w_crit_alt_arm": meanfield.w_critical(alt),
        "w_crit_eq_arm": meanfield.w_critical(eq),
        "physical": meanfield.is_physical_w_crit(alt),
    }, indent=2))
    return EXIT_OK


def _cmd_gen_balls(args) -> int:
    cfg = _load_config(args.config)
    if not isinstance(cfg.dataset, datasets.BallGenSpec):
        raise orchestrator.ConfigError("gen-balls needs a config with a 'balls' dataset")
    video_set = datasets.generate_ball_videos(cfg.dataset)
    datasets.save_ball_videos(args.out, video_set)
    print(json.dumps({
        "out": args.out,
        "n_videos": int(video_set.labels.size),
        "digest": datasets.dataset_digest(video_set.videos, video_set.labels),
    }, indent=2))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _override_seed(_load_config(args.config), args.seed)
    result = orchestrator.run_sweep(cfg, args.param, jobs=args.jobs)
    paths = orchestrator.emit_results(cfg, [result], args.out)
    if result.failures:
        for idx, msg in sorted(result.failures.items()):
            print(f"level {idx} failed: {msg}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps({k: str(v) for k, v in paths.items()}, indent=2))
    return EXIT_OK


def _cmd_equiv_exp(args) -> int:
    cfg = _override_seed(_load_config(args.config), args.seed)
    result = orchestrator.equivalence_experiment(cfg, args.beta_alt, jobs=args.jobs)
    doc = {
        "beta_alt": result.beta_alt,
        "theta_eq": result.theta_eq,
        "w_crit": result.w_crit,
        "mean_equivalent_dnorm": result.mean_equivalent_dnorm,
        "mean_baseline_dnorm": result.mean_baseline_dnorm,
        "equivalent_dnorm": {"/".join(k): v for k, v in result.equivalent_dnorm.items()},
        "baseline_dnorm": {"/".join(k): v for k, v in result.baseline_dnorm.items()},
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_robustness(args) -> int:
    groups: dict[tuple, list[dict]] = defaultdict(list)
    with open(args.curves, newline="") as fh:
        for row in csv.DictReader(fh):
            key = tuple(row[k] for k in (
                "trial_id", "task", "reset", "feature_family", "readout",
                "metric", "swept_param", "level",
            ))
            groups[key].append(row)
    out_rows = []
    for key, rows in sorted(groups.items()):
        rows.sort(key=lambda r: float(r["w"]))
        curve = robustness.PerformanceCurve(
            w_grid=np.array([float(r["w"]) for r in rows]),
            mean=np.array([float(r["mean"]) for r in rows]),
            std=np.array([float(r["std"]) for r in rows]),
            metric=key[5],
        )
        try:
            rep = robustness.robustness_interval(curve, gamma=args.gamma,
                                                 w_crit=args.w_crit)
            interval = [
                format(rep.gamma, ".17g"), format(rep.w_min, ".17g"),
                format(rep.w_max, ".17g"), format(rep.delta, ".17g"),
                "" if args.w_crit is None else format(args.w_crit, ".17g"),
                "" if rep.contains_crit is None else str(rep.contains_crit).lower(),
                "" if rep.midpoint_below_crit is None
                else str(rep.midpoint_below_crit).lower(),
            ]
        except robustness.RobustnessError:
            # undefined interval (non-positive curve peak)
            interval = [format(args.gamma, ".17g"), "nan", "nan", "nan",
                        "" if args.w_crit is None else format(args.w_crit, ".17g"),
                        "", ""]
        out_rows.append(list(key) + interval)
    lines = [",".join(orchestrator.ROBUSTNESS_HEADER)]
    lines += [",".join(str(v) for v in row) for row in out_rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "topology-stats": _cmd_topology_stats,
    "meanfield": _cmd_meanfield,
    "equiv": _cmd_equiv,
    "gen-balls": _cmd_gen_balls,
    "sweep": _cmd_sweep,
    "equiv-exp": _cmd_equiv_exp,
    "robustness": _cmd_robustness,
}

_VALIDATION_ERRORS = (
    orchestrator.ConfigError,
    topology.TopologyError,
    meanfield.MeanFieldError,
    robustness.RobustnessError,
    datasets.DatasetError,
    json.JSONDecodeError,
    FileNotFoundError,
)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
