"""Benchmarking toolkit for quantum-neural-network classifiers.

Trains shot-based variational classifiers over the full hyperparameter
grid (feature map, entanglement, ansatz, optimizer, initialization,
preprocessing, noise) on a built-in state-vector simulator and analyses
the results with nonparametric significance tests.
"""

__version__ = "0.1.0"

from .analysis import (
    SignificanceResult,
    accuracy,
    best_set,
    friedman,
    kruskal_wallis,
    mann_whitney_u,
    pairwise_matrix,
    weighted_f1,
    wilcoxon_signed_rank,
    worst_set,
)
from .circuits import (
    BoundCircuit,
    ParamCircuit,
    ParamExpression,
    bind,
    compose,
    entanglement_pairs,
    weight_count,
)
from .datapipe import (
    Dataset,
    lda_fit_transform,
    load_and_encode,
    make_synthetic,
    pca_fit_transform,
    prepare,
    scale_features,
    subsample,
)
from .library import AnsatzSpec, FeatureMapSpec, build_ansatz, build_feature_map
from .models import (
    InitializerSpec,
    QnnModel,
    TrainedModel,
    cross_entropy_loss,
    initialize_params,
    predict,
    predict_proba,
    train,
)
from .noise import NoiseModel, load_noise_model, save_noise_model
from .optimizers import (
    OptimizeResult,
    OptimizerSpec,
    minimize,
    minimize_cobyla,
    minimize_nelder_mead,
    minimize_spsa,
)
from .simulator import (
    GateKind,
    StateVector,
    apply_instruction,
    run_noisy_trajectories,
    run_statevector,
    sample_counts,
)
from .sweep import (
    ModelConfig,
    SweepSettings,
    execute_config,
    generate_grid,
    run_sweep,
)
