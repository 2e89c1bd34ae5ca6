"""Hyperparameter grid generation and resumable parallel execution.

The grid per dataset and noise setting is the Cartesian product of the
study's factors:

    feature maps   : Z, plus ZZ x {full, linear, circular, sca, pairwise}  (6)
    ansatz variants: RealAmplitudes x4, EfficientSU2 x4, TwoLocal x5,
                     PauliTwoDesign                                        (14)
    optimizers     : COBYLA, SPSA, Nelder-Mead                             (3)
    initializers   : uniform, beta, normal 1/L                             (3)
    preprocessing  : PCA, LDA                                              (2)

which is 1512 configurations; the Rice dataset drops LDA (a binary label
admits a single discriminant direction) leaving 756.

Results are appended to a line-delimited JSON file, one record per line,
so interrupted sweeps can resume by config hash and runs can execute in
parallel without coordination beyond the single writer.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .analysis import accuracy as _accuracy
from .analysis import weighted_f1 as _weighted_f1
from .datapipe import Dataset, prepare
from .library import AnsatzSpec, FeatureMapSpec
from .models import InitializerSpec, QnnModel, predict, train
from .noise import NoiseModel
from .optimizers import OptimizerSpec

SCHEMA_VERSION = 1

ANSATZ_VARIANTS = (
    [("real_amplitudes", t) for t in ("full", "linear", "circular", "sca")]
    + [("efficient_su2", t) for t in ("full", "linear", "circular", "sca")]
    + [("two_local", t) for t in ("full", "linear", "circular", "sca", "pairwise")]
    + [("pauli_two_design", None)]
)
FEATURE_MAP_VARIANTS = [("z", None)] + [
    ("zz", t) for t in ("full", "linear", "circular", "sca", "pairwise")
]
OPTIMIZERS = ("cobyla", "spsa", "nelder_mead")
INITIALIZERS = ("uniform", "beta", "normal_inv_l")

LOSS_TRACE_POINTS = 64


@dataclass(frozen=True)
class ModelConfig:
    dataset: str
    preprocessing: str
    feature_map: str
    feature_map_entanglement: str | None
    ansatz: str
    ansatz_entanglement: str | None
    optimizer: str
    initializer: str
    noise: str | None = None
    seed: int = 0

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


@dataclass
class SweepSettings:
    """Desk-scale knobs; every under-specified study default lives here."""

    shots: int = 1024
    feature_map_reps: int = 2
    ansatz_reps: int = 3
    beta_alpha: float = 2.0
    beta_beta: float = 2.0
    budgets: dict = field(
        default_factory=lambda: {"cobyla": 500, "spsa": 300, "nelder_mead": 250}
    )
    early_stop_tolerance: float = 0.1
    n_train: int = 400
    n_test: int = 250
    out_dims: int = 7
    decode: str = "modulo"
    stratify: bool = True
    synthetic_samples: int = 800
    synthetic_features: int = 7
    synthetic_classes: int = 2
    synthetic_seed: int = 11

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepSettings":
        settings = cls()
        for key, value in raw.items():
            if not hasattr(settings, key):
                raise ValueError(f"unknown setting {key!r}")
            if key == "budgets":
                settings.budgets.update(value)
            else:
                setattr(settings, key, type(getattr(settings, key))(value))
        return settings


def generate_grid(dataset: str, noise_setting: str | None = None) -> list:
    """All study configurations for one dataset and noise setting."""
    preprocessing = ("pca",) if dataset == "rice" else ("pca", "lda")
    grid = []
    for prep in preprocessing:
        for fm_kind, fm_ent in FEATURE_MAP_VARIANTS:
            for an_kind, an_ent in ANSATZ_VARIANTS:
                for opt in OPTIMIZERS:
                    for init in INITIALIZERS:
                        grid.append(
                            ModelConfig(
                                dataset=dataset,
                                preprocessing=prep,
                                feature_map=fm_kind,
                                feature_map_entanglement=fm_ent,
                                ansatz=an_kind,
                                ansatz_entanglement=an_ent,
                                optimizer=opt,
                                initializer=init,
                                noise=noise_setting,
                            )
                        )
    return grid


def config_seed(config: ModelConfig, global_seed: int) -> int:
    """Stable 63-bit per-config seed mixing the canonical encoding."""
    payload = config.canonical() + f"|{global_seed}"
    digest = hashlib.sha256(payload.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _downsample(values, limit: int = LOSS_TRACE_POINTS) -> list:
    values = list(values)
    if len(values) <= limit:
        return [float(v) for v in values]
    idx = np.linspace(0, len(values) - 1, limit).round().astype(int)
    return [float(values[i]) for i in idx]


def build_model_parts(config: ModelConfig, settings: SweepSettings, n_dims: int, n_classes: int, noise_model):
    feature_map = FeatureMapSpec(
        kind=config.feature_map,
        n_features=n_dims,
        reps=settings.feature_map_reps,
        entanglement=config.feature_map_entanglement,
    )
    ansatz = AnsatzSpec(
        kind=config.ansatz,
        n_qubits=n_dims,
        reps=settings.ansatz_reps,
        entanglement=config.ansatz_entanglement,
        structure_seed=config.seed,
    )
    model = QnnModel(
        feature_map=feature_map,
        ansatz=ansatz,
        n_classes=n_classes,
        shots=settings.shots,
        decode=settings.decode,
        noise=noise_model,
    )
    optimizer = OptimizerSpec(
        kind=config.optimizer,
        max_iterations=settings.budgets[config.optimizer],
        early_stop_tolerance=(
            None if config.optimizer == "spsa" else settings.early_stop_tolerance
        ),
    )
    init = InitializerSpec(
        kind=config.initializer,
        alpha=settings.beta_alpha,
        beta=settings.beta_beta,
    )
    return model, optimizer, init


def execute_config(config: ModelConfig, settings: SweepSettings, dataset: Dataset, noise_model: NoiseModel | None) -> dict:
    """Run one configuration end to end and return its record dict."""
    started = time.perf_counter()
    base = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": config.hash(),
        "config": asdict(config),
        "toolkit_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    try:
        prep = prepare(
            dataset,
            preprocessing=config.preprocessing,
            out_dims=settings.out_dims,
            seed=config.seed,
            n_train=settings.n_train,
            n_test=settings.n_test,
            stratify=settings.stratify,
        )
        model, optimizer, init = build_model_parts(
            config, settings, prep.n_dims, prep.n_classes, noise_model
        )
        trained = train(model, prep.train_X, prep.train_y, optimizer, init, config.seed)
        preds = predict(trained, prep.test_X)
        record = dict(
            base,
            status="ok",
            accuracy=_accuracy(preds, prep.test_y),
            weighted_f1=_weighted_f1(preds, prep.test_y),
            wall_time_s=round(time.perf_counter() - started, 3),
            iterations=trained.trace.iterations_used,
            steps=trained.trace.steps_used,
            evaluations=trained.trace.evaluations_used,
            terminated_by=trained.trace.terminated_by,
            loss_trace=_downsample(trained.trace.loss_trace),
            n_qubits=prep.n_dims,
        )
        return record
    except Exception as exc:  # noqa: BLE001 - failures become records
        return dict(
            base,
            status="failed",
            error=f"{type(exc).__name__}: {exc}",
            wall_time_s=round(time.perf_counter() - started, 3),
        )


@dataclass
class SweepSummary:
    completed: int = 0
    failed: int = 0
    skipped: int = 0

    def line(self) -> str:
        return f"SWEEP completed={self.completed} failed={self.failed} skipped={self.skipped}"


def read_result_hashes(path) -> set:
    """Hashes already present in a results file; tolerates a torn last line."""
    hashes = set()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError:
                    continue
                if "config_hash" in record:
                    hashes.add(record["config_hash"])
    except FileNotFoundError:
        pass
    return hashes


def load_results(path) -> list:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                continue
            if record.get("schema_version") != SCHEMA_VERSION:
                raise ValueError(
                    f"unsupported results schema version {record.get('schema_version')!r}"
                )
            records.append(record)
    return records


def run_sweep(
    grid,
    parallelism: int,
    global_seed: int,
    output_path,
    resume: bool = False,
    settings: SweepSettings | None = None,
    dataset: Dataset | None = None,
    noise_model: NoiseModel | None = None,
) -> SweepSummary:
    """Execute every config in the grid, appending records as they finish."""
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    settings = settings or SweepSettings()
    if dataset is None:
        raise ValueError("a loaded Dataset is required")

    seeded = [replace(c, seed=config_seed(c, global_seed)) for c in grid]
    summary = SweepSummary()
    if resume:
        done = read_result_hashes(output_path)
        pending = [c for c in seeded if c.hash() not in done]
        summary.skipped = len(seeded) - len(pending)
    else:
        pending = seeded

    mode = "a" if resume else "w"
    with open(output_path, mode, encoding="utf-8") as out:
        def write(record: dict) -> None:
            out.write(json.dumps(record, sort_keys=True) + "\n")
            out.flush()
            if record.get("status") == "ok":
                summary.completed += 1
            else:
                summary.failed += 1

        if parallelism == 1:
            for config in pending:
                write(execute_config(config, settings, dataset, noise_model))
        else:
            with ProcessPoolExecutor(max_workers=parallelism) as pool:
                futures = [
                    pool.submit(execute_config, config, settings, dataset, noise_model)
                    for config in pending
                ]
                for fut in as_completed(futures):
                    write(fut.result())
    return summary
