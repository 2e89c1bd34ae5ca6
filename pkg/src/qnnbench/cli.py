"""Command-line frontend: single runs, sweeps, grids and analysis reports.

Commands print a stable machine-readable summary line on success and exit
non-zero with a diagnostic on any failure. Default worker count for
sweeps can be overridden with the QNNBENCH_PARALLEL environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .analysis import (
    ALPHA,
    FACTOR_FIELDS,
    factor_level,
    friedman,
    kruskal_wallis,
    pairwise_matrix,
    pairing_key,
    wilcoxon_signed_rank,
)
from .datapipe import Dataset, load_and_encode, make_synthetic, prepare
from .models import InitializerSpec, predict, train
from .noise import load_noise_model
from .optimizers import OptimizerSpec
from .sweep import (
    SCHEMA_VERSION,
    ModelConfig,
    SweepSettings,
    build_model_parts,
    config_seed,
    execute_config,
    generate_grid,
    load_results,
    run_sweep,
)


def _load_dataset(name: str, data_path, settings: SweepSettings) -> Dataset:
    if name == "synthetic":
        return make_synthetic(
            n_samples=settings.synthetic_samples,
            n_features=settings.synthetic_features,
            n_classes=settings.synthetic_classes,
            seed=settings.synthetic_seed,
        )
    if not data_path:
        raise ValueError(f"dataset {name!r} needs --data pointing at its raw file")
    return load_and_encode(data_path, name)


def _settings_from_args(args) -> SweepSettings:
    settings = SweepSettings()
    if getattr(args, "overrides", None):
        with open(args.overrides, "r", encoding="utf-8") as fh:
            settings = SweepSettings.from_dict(json.load(fh))
    return settings


# ---------------------------------------------------------------------------
# run


def _config_from_file(path) -> tuple:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    fm = raw.get("feature_map", {})
    an = raw.get("ansatz", {})
    opt = raw.get("optimizer", {})
    init = raw.get("initializer", {})
    config = ModelConfig(
        dataset=raw["dataset"],
        preprocessing=raw.get("preprocessing", "pca"),
        feature_map=fm.get("kind", "z"),
        feature_map_entanglement=fm.get("entanglement"),
        ansatz=an.get("kind", "real_amplitudes"),
        ansatz_entanglement=an.get("entanglement"),
        optimizer=opt.get("kind", "cobyla"),
        initializer=init.get("kind", "beta"),
        noise=raw.get("noise"),
        seed=int(raw.get("seed", 0)),
    )
    settings = SweepSettings()
    settings.shots = int(raw.get("shots", settings.shots))
    settings.feature_map_reps = int(fm.get("reps", settings.feature_map_reps))
    settings.ansatz_reps = int(an.get("reps", settings.ansatz_reps))
    settings.beta_alpha = float(init.get("alpha", settings.beta_alpha))
    settings.beta_beta = float(init.get("beta", settings.beta_beta))
    if "max_iterations" in opt:
        settings.budgets[config.optimizer] = int(opt["max_iterations"])
    if "early_stop_tolerance" in opt and opt["early_stop_tolerance"] is not None:
        settings.early_stop_tolerance = float(opt["early_stop_tolerance"])
    settings.n_train = int(raw.get("n_train", settings.n_train))
    settings.n_test = int(raw.get("n_test", settings.n_test))
    settings.out_dims = int(raw.get("out_dims", settings.out_dims))
    settings.decode = raw.get("decode", settings.decode)
    for key in ("synthetic_samples", "synthetic_features", "synthetic_classes", "synthetic_seed"):
        if key in raw:
            setattr(settings, key, int(raw[key]))
    return config, settings, raw.get("data_path")


def cmd_run(args) -> int:
    config, settings, data_path = _config_from_file(args.config)
    if args.seed is not None:
        config = ModelConfig(**{**config.__dict__, "seed": args.seed})
    dataset = _load_dataset(config.dataset, data_path, settings)
    noise_model = load_noise_model(config.noise) if config.noise else None
    record = execute_config(config, settings, dataset, noise_model)
    line = json.dumps(record, sort_keys=True)
    if args.out:
        with open(args.out, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
    print(line)
    if record["status"] != "ok":
        print(f"run failed: {record.get('error')}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args) -> int:
    settings = _settings_from_args(args)
    dataset = _load_dataset(args.dataset, args.data, settings)
    noise_model = None
    noise_name = None
    if args.noise and args.noise != "none":
        noise_model = load_noise_model(args.noise)
        noise_name = os.path.basename(args.noise)
    grid = generate_grid(args.dataset, noise_name)
    if args.subsample is not None:
        if not 0 < args.subsample <= 1:
            raise ValueError("--subsample must be in (0, 1]")
        k = max(1, round(args.subsample * len(grid)))
        rng = np.random.default_rng(args.seed)
        picks = rng.choice(len(grid), size=k, replace=False)
        grid = [grid[i] for i in sorted(picks)]
    summary = run_sweep(
        grid,
        parallelism=args.parallel,
        global_seed=args.seed,
        output_path=args.out,
        resume=args.resume,
        settings=settings,
        dataset=dataset,
        noise_model=noise_model,
    )
    print(summary.line() + f" out={args.out}")
    return 0 if summary.failed == 0 else 1


# ---------------------------------------------------------------------------
# grid


def cmd_grid(args) -> int:
    grid = generate_grid(args.dataset, None)
    hashes = {c.hash() for c in grid}
    if len(hashes) != len(grid):
        print("GRID error: duplicate configurations", file=sys.stderr)
        return 1
    print(f"GRID dataset={args.dataset} size={len(grid)}")
    return 0


# ---------------------------------------------------------------------------
# analyze


def _ok_records(path) -> list:
    records = load_results(path)
    ok = [r for r in records if r.get("status") == "ok"]
    if not ok:
        raise ValueError(f"no successful records in {path}")
    return ok


def _format_top_table(records, k: int) -> str:
    rows = sorted(records, key=lambda r: r["weighted_f1"], reverse=True)[:k]
    header = "acc,f1,time_s,ansatz,optimizer,feature_map,preprocessing,initializer"
    lines = [header]
    for r in rows:
        c = r["config"]
        ansatz = c["ansatz"] + (f"/{c['ansatz_entanglement']}" if c["ansatz_entanglement"] else "")
        fmap = c["feature_map"] + (
            f"/{c['feature_map_entanglement']}" if c["feature_map_entanglement"] else ""
        )
        lines.append(
            f"{r['accuracy']:.3f},{r['weighted_f1']:.3f},{r.get('wall_time_s', 0):.0f},"
            f"{ansatz},{c['optimizer']},{fmap},{c['preprocessing']},{c['initializer']}"
        )
    return "\n".join(lines) + "\n"


def _factor_summary(records, factor: str) -> str:
    levels = sorted(
        {factor_level(r, factor) for r in records if factor_level(r, factor) is not None},
        key=str,
    )
    if len(levels) < 2:
        raise ValueError(f"insufficient levels for factor {factor!r} (found {levels})")

    lines = [f"factor: {factor} (alpha={ALPHA})"]
    groups = {}
    for r in records:
        lvl = factor_level(r, factor)
        if lvl is not None:
            groups.setdefault(lvl, {}).setdefault(pairing_key(r, factor), []).append(
                r["accuracy"]
            )
    means = {lvl: {k: float(np.mean(v)) for k, v in d.items()} for lvl, d in groups.items()}
    for lvl in levels:
        acc = list(means[lvl].values())
        lines.append(
            f"  {lvl}: n={len(acc)} mean_acc={np.mean(acc):.4f} max_acc={np.max(acc):.4f}"
        )

    shared = set.intersection(*(set(means[lvl]) for lvl in levels))
    blocks = [[means[lvl][key] for lvl in levels] for key in sorted(shared, key=str)]
    try:
        if len(levels) == 2 and len(blocks) >= 5:
            a = np.array([b[0] for b in blocks])
            b = np.array([x[1] for x in blocks])
            res = wilcoxon_signed_rank(a, b)
        elif len(levels) >= 3 and len(blocks) >= 2:
            res = friedman(np.array(blocks))
        else:
            res = kruskal_wallis([list(means[lvl].values()) for lvl in levels])
        lines.append(
            f"  omnibus: {res.test} statistic={res.statistic:.4f} p={res.p_value:.4f} "
            f"({'significant' if res.p_value < ALPHA else 'not significant'})"
        )
    except ValueError as exc:
        lines.append(f"  omnibus: unavailable ({exc})")
    return "\n".join(lines) + "\n"


def _matrix_csv(matrix) -> str:
    lines = ["row,col,p_value,verdict"]
    for (row, col), (p, verdict) in sorted(matrix.cells.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
        p_text = "" if p != p else f"{p:.4f}"  # NaN -> empty
        lines.append(f"{row},{col},{p_text},{verdict}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    records = _ok_records(args.results)
    os.makedirs(args.report, exist_ok=True)
    outputs = []

    top_k = args.top if args.top is not None else (5 if not (args.factor or args.matrix) else None)
    if top_k is not None:
        text = _format_top_table(records, top_k)
        path = os.path.join(args.report, f"top{top_k}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        outputs.append(path)
        print(text, end="")
    if args.factor:
        text = _factor_summary(records, args.factor)
        path = os.path.join(args.report, f"factor_{args.factor}.txt")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        outputs.append(path)
        print(text, end="")
    if args.matrix:
        matrix = pairwise_matrix(records, args.matrix)
        text = _matrix_csv(matrix)
        path = os.path.join(args.report, f"matrix_{args.matrix}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        outputs.append(path)
        print(text, end="")
    print(f"ANALYZE records={len(records)} reports={','.join(outputs)}")
    return 0


# ---------------------------------------------------------------------------
# noise-validate


def cmd_noise_validate(args) -> int:
    model = load_noise_model(args.path)
    print(
        f"NOISE n_qubits={model.n_qubits} p1={model.p1} p2={model.p2} "
        f"readout_max={model.readout.max()}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnnbench",
        description="Train and analyse shot-based quantum-neural-network classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train and evaluate one configuration")
    p_run.add_argument("--config", required=True, help="JSON config file")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=None, help="append the record to this file")
    p_run.set_defaults(func=cmd_run)

    default_parallel = int(os.environ.get("QNNBENCH_PARALLEL", "1"))
    p_sweep = sub.add_parser("sweep", help="run a hyperparameter grid")
    p_sweep.add_argument("--dataset", required=True)
    p_sweep.add_argument("--data", default=None, help="raw dataset file (non-synthetic)")
    p_sweep.add_argument("--noise", default="none", help="noise file path or 'none'")
    p_sweep.add_argument("--out", required=True, help="results file (JSON lines)")
    p_sweep.add_argument("--parallel", type=int, default=default_parallel)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--resume", action="store_true")
    p_sweep.add_argument("--subsample", type=float, default=None,
                         help="run only this fraction of the grid")
    p_sweep.add_argument("--overrides", default=None,
                         help="JSON file of SweepSettings overrides")
    p_sweep.set_defaults(func=cmd_sweep)

    p_grid = sub.add_parser("grid", help="print the grid size for a dataset")
    p_grid.add_argument("--dataset", required=True)
    p_grid.set_defaults(func=cmd_grid)

    p_an = sub.add_parser("analyze", help="reports from a results file")
    p_an.add_argument("--results", required=True)
    p_an.add_argument("--report", required=True, help="output directory")
    p_an.add_argument("--top", type=int, default=None)
    p_an.add_argument("--factor", default=None, choices=sorted(FACTOR_FIELDS))
    p_an.add_argument("--matrix", default=None, choices=sorted(FACTOR_FIELDS))
    p_an.set_defaults(func=cmd_analyze)

    p_nv = sub.add_parser("noise-validate", help="validate a noise file")
    p_nv.add_argument("--path", required=True)
    p_nv.set_defaults(func=cmd_noise_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
