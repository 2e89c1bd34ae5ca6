"""The classifier: encode, execute, decode, score and train.

A model composes a feature map with an ansatz on the same register,
estimates class probabilities from measurement shots, and trains its
weight vector by minimizing the mean cross-entropy over the full training
set with a derivative-free optimizer.

Randomness is organised around a single run seed: initialization, the
optimizer stream, and per-(evaluation, sample) shot streams are all
derived from it, so a (model, data, seed) triple fully determines the
trained result.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuits import ParamCircuit, compose
from .library import AnsatzSpec, FeatureMapSpec, build_ansatz, build_feature_map
from .noise import NoiseModel
from .optimizers import OptimizeResult, OptimizerSpec, minimize
from .simulator import (
    _apply_inplace,
    _noisy_index_counts,
    _run_ops,
    _sample_index_counts,
    bitstring_to_index,
)

INITIALIZER_KINDS = (
    "uniform",        # U[0, 1], the stock default
    "beta",           # Beta(alpha, beta), rescaled to nothing (support [0, 1])
    "normal_inv_l",   # N(0, 1/L), L = ansatz layer count
    "beta_mean",      # constant alpha/(alpha+beta)
    "normal_matched", # normal with the beta distribution's mean and sd
)

DECODE_KINDS = ("modulo", "parity")

LOSS_EPS = 1e-10

# Sub-stream tags hung off the run seed.
_TAG_INIT = 0
_TAG_OPT = 1
_TAG_SHOTS = 2
_TAG_TEST = 3


@dataclass(frozen=True)
class InitializerSpec:
    kind: str
    alpha: float = 2.0
    beta: float = 2.0
    layers: int | None = None  # normal_inv_l; taken from the ansatz if unset

    def __post_init__(self):
        if self.kind not in INITIALIZER_KINDS:
            raise ValueError(f"unknown initializer kind {self.kind!r}")
        if self.kind in ("beta", "beta_mean", "normal_matched"):
            if self.alpha <= 0 or self.beta <= 0:
                raise ValueError("beta distribution needs alpha > 0 and beta > 0")
        if self.kind == "normal_inv_l" and self.layers is not None and self.layers <= 0:
            raise ValueError("layer count must be positive")

    def with_layers(self, layers: int) -> "InitializerSpec":
        if self.kind != "normal_inv_l" or self.layers is not None:
            return self
        return InitializerSpec(self.kind, self.alpha, self.beta, layers)


def initialize_params(
    spec: InitializerSpec, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw an initial weight vector of the given length."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if spec.kind == "uniform":
        return rng.random(count)
    if spec.kind == "beta":
        return rng.beta(spec.alpha, spec.beta, size=count)
    if spec.kind == "normal_inv_l":
        if spec.layers is None or spec.layers <= 0:
            raise ValueError("normal_inv_l needs a positive layer count")
        return rng.normal(0.0, 1.0 / np.sqrt(spec.layers), size=count)
    mean = spec.alpha / (spec.alpha + spec.beta)
    if spec.kind == "beta_mean":
        return np.full(count, mean)
    sd = np.sqrt(
        spec.alpha * spec.beta
        / ((spec.alpha + spec.beta) ** 2 * (spec.alpha + spec.beta + 1))
    )
    return rng.normal(mean, sd, size=count)


@lru_cache(maxsize=64)
def class_map(n_qubits: int, n_classes: int, decode: str) -> np.ndarray:
    """Basis-state index -> class index, for the chosen decoding."""
    if decode not in DECODE_KINDS:
        raise ValueError(f"unknown decode {decode!r}")
    idx = np.arange(1 << n_qubits)
    if decode == "modulo":
        return idx % n_classes
    if n_classes != 2:
        raise ValueError("parity decoding requires exactly 2 classes")
    bits = idx.copy()
    parity = np.zeros_like(idx)
    while bits.any():
        parity ^= bits & 1
        bits >>= 1
    return parity


def counts_to_probs(counts, n_qubits: int, n_classes: int, decode: str = "modulo") -> np.ndarray:
    """Bucket a histogram (bitstring->count dict or index-count array) into
    per-class frequencies."""
    cmap = class_map(n_qubits, n_classes, decode)
    if isinstance(counts, dict):
        arr = np.zeros(1 << n_qubits, dtype=np.int64)
        for bits, c in counts.items():
            arr[bitstring_to_index(bits)] = c
        counts = arr
    totals = np.bincount(cmap, weights=counts, minlength=n_classes)
    shots = counts.sum()
    if shots <= 0:
        raise ValueError("empty histogram")
    return totals / shots


@dataclass
class QnnModel:
    feature_map: FeatureMapSpec
    ansatz: AnsatzSpec
    n_classes: int
    shots: int = 1024
    decode: str = "modulo"
    noise: NoiseModel | None = None

    def __post_init__(self):
        if self.feature_map.n_features != self.ansatz.n_qubits:
            raise ValueError(
                f"feature map acts on {self.feature_map.n_features} qubits, "
                f"ansatz on {self.ansatz.n_qubits}"
            )
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.decode not in DECODE_KINDS:
            raise ValueError(f"unknown decode {self.decode!r}")
        if self.noise is not None:
            self.noise.validate_for(self.ansatz.n_qubits)

    @property
    def n_qubits(self) -> int:
        return self.ansatz.n_qubits

    def circuit(self) -> ParamCircuit:
        return compose(build_feature_map(self.feature_map), build_ansatz(self.ansatz))


def _bound_class_probs(model: QnnModel, bound, rng) -> np.ndarray:
    cmap = class_map(model.n_qubits, model.n_classes, model.decode)
    if model.noise is None:
        probs = np.abs(_run_ops(bound.n_qubits, bound.ops)) ** 2
        probs /= probs.sum()
        counts = _sample_index_counts(probs, model.shots, rng)
    else:
        counts = _noisy_index_counts(bound, model.noise, model.shots, rng)
    return np.bincount(cmap, weights=counts, minlength=model.n_classes) / model.shots


def predict_proba(
    model: QnnModel, x, theta, rng: np.random.Generator
) -> np.ndarray:
    """Estimate class probabilities for one sample from ``shots`` measurements."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if x.shape != (model.feature_map.n_features,):
        raise ValueError(
            f"expected {model.feature_map.n_features} features, got {x.shape}"
        )
    bound = model.circuit().bind(x, theta)
    return _bound_class_probs(model, bound, rng)


def cross_entropy_loss(probabilities, labels) -> float:
    """Mean of -log(p_label + eps) over the batch."""
    probs = np.asarray(probabilities, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise ValueError("need a non-empty batch of probability rows")
    if labels.shape != (probs.shape[0],):
        raise ValueError("labels must match the batch length")
    if labels.min() < 0 or labels.max() >= probs.shape[1]:
        raise ValueError("label outside class range")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-6):
        raise ValueError("probability rows must sum to 1")
    picked = probs[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(picked + LOSS_EPS)))


@dataclass
class TrainedModel:
    model: QnnModel
    theta: np.ndarray
    trace: OptimizeResult
    wall_time: float
    seed: int


def _shot_rng(seed: int, tag: int, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, tag) + key))


def train(
    model: QnnModel,
    features,
    labels,
    optimizer: OptimizerSpec,
    init: InitializerSpec,
    seed: int,
) -> TrainedModel:
    """Fit the weight vector on the full training set.

    The objective is the mean cross-entropy of shot-estimated class
    probabilities; one objective call evaluates every training sample with
    its own deterministic sub-stream.
    """
    start = time.perf_counter()
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("training set must be a non-empty matrix")
    if features.shape[1] != model.feature_map.n_features:
        raise ValueError(
            f"feature dimension {features.shape[1]} does not match the "
            f"model's {model.feature_map.n_features}"
        )
    if labels.shape != (features.shape[0],):
        raise ValueError("labels must match the feature rows")

    encoder = build_feature_map(model.feature_map)
    ansatz = build_ansatz(model.ansatz)
    composed = compose(encoder, ansatz)
    init = init.with_layers(model.ansatz.layer_count())
    theta0 = initialize_params(
        init, ansatz.n_weights, _shot_rng(seed, _TAG_INIT)
    )

    m = features.shape[0]
    # Noiseless shortcut: the post-encoding state of each sample never
    # changes across objective calls, so cache it and replay only the
    # ansatz gates. Noisy runs must replay everything (errors can hit
    # encoding gates too).
    prefix_states = None
    if model.noise is None:
        prefix_states = np.empty((m, 1 << model.n_qubits), dtype=complex)
        for i in range(m):
            bound = encoder.bind(features[i], ())
            prefix_states[i] = _run_ops(bound.n_qubits, bound.ops)

    cmap = class_map(model.n_qubits, model.n_classes, model.decode)
    eval_counter = [0]

    def objective(theta):
        e = eval_counter[0]
        eval_counter[0] += 1
        probs = np.empty((m, model.n_classes))
        if prefix_states is not None:
            bound_ansatz = ansatz.bind((), theta)
            for i in range(m):
                amps = prefix_states[i].copy()
                for gate, qubits, angle in bound_ansatz.ops:
                    _apply_inplace(amps, model.n_qubits, gate, qubits, angle)
                p = np.abs(amps) ** 2
                p /= p.sum()
                counts = _sample_index_counts(
                    p, model.shots, _shot_rng(seed, _TAG_SHOTS, e, i)
                )
                probs[i] = (
                    np.bincount(cmap, weights=counts, minlength=model.n_classes)
                    / model.shots
                )
        else:
            for i in range(m):
                bound = composed.bind(features[i], theta)
                probs[i] = _bound_class_probs(
                    model, bound, _shot_rng(seed, _TAG_SHOTS, e, i)
                )
        return cross_entropy_loss(probs, labels)

    if optimizer.budget == 0:
        value = objective(theta0)
        trace = OptimizeResult(
            best_point=theta0,
            best_value=value,
            iterations_used=0,
            steps_used=0,
            evaluations_used=1,
            loss_trace=[value],
            terminated_by="budget",
        )
    else:
        trace = minimize(objective, theta0, optimizer, rng=_shot_rng(seed, _TAG_OPT))

    return TrainedModel(
        model=model,
        theta=np.asarray(trace.best_point, dtype=float),
        trace=trace,
        wall_time=time.perf_counter() - start,
        seed=seed,
    )


def predict(trained: TrainedModel, features) -> np.ndarray:
    """Class predictions for a feature matrix (deterministic per run seed)."""
    features = np.asarray(features, dtype=float)
    model = trained.model
    circuit = model.circuit()
    preds = np.empty(features.shape[0], dtype=int)
    for i in range(features.shape[0]):
        bound = circuit.bind(features[i], trained.theta)
        probs = _bound_class_probs(
            model, bound, _shot_rng(trained.seed, _TAG_TEST, i)
        )
        preds[i] = int(np.argmax(probs))
    return preds
