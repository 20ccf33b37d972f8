"""Quantum anomaly detection: autoencoder compression + fidelity-kernel SVM.

The package couples an amplitude-encoded quantum autoencoder (trained via
a SWAP-test compression loss) with a trainable fidelity quantum kernel
feeding a dual-form SVM, all on an embedded statevector simulator with
optional depolarizing noise.
"""

from __future__ import annotations

from .encoding import (
    DegenerateSampleError,
    EncodedSample,
    RawSample,
    StandardizationStats,
    amplitude_encode,
    fit_standardizer,
    num_qubits_for,
    preprocess,
)
from .kernel import (
    FeatureMapConfig,
    KernelMatrix,
    KernelParams,
    build_feature_map,
    cross_kernel_matrix,
    init_kernel_params,
    kernel_entry,
    kernel_matrix,
    qsvc_margin_loss,
    train_kernel,
)
from .noise import (
    DensityMatrix,
    DepolarizingModel,
    density_evolve,
    ensemble_counts,
    trajectory_ensemble,
    trajectory_run,
)
from .optim import (
    CobylaConfig,
    OptimizationError,
    OptIteration,
    SpsaConfig,
    cobyla_minimize,
    spsa_gradient_estimate,
    spsa_minimize,
)
from .qae import (
    EncoderParams,
    LossStats,
    QaeConfig,
    TrainLogRow,
    batched_loss_stats,
    build_encoder,
    build_swaptest_circuit,
    extract_latent,
    init_params,
    qae_loss,
    train_qae,
)
from .qsim import (
    Circuit,
    Gate,
    MeasurementCounts,
    StateVector,
    apply_gate,
    inverse_gates,
    marginal_probabilities,
    run,
    sample,
    zero_state,
)
from .qsvc import (
    Metrics,
    SvmModel,
    compute_metrics,
    decision_function,
    dual_objective,
    predict,
    solve_dual,
)
from .seeding import derive_seed, rng_for

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "CobylaConfig",
    "DegenerateSampleError",
    "DensityMatrix",
    "DepolarizingModel",
    "EncodedSample",
    "EncoderParams",
    "FeatureMapConfig",
    "Gate",
    "KernelMatrix",
    "KernelParams",
    "LossStats",
    "MeasurementCounts",
    "Metrics",
    "OptIteration",
    "OptimizationError",
    "QaeConfig",
    "RawSample",
    "SpsaConfig",
    "StandardizationStats",
    "StateVector",
    "SvmModel",
    "TrainLogRow",
    "amplitude_encode",
    "apply_gate",
    "batched_loss_stats",
    "build_encoder",
    "build_feature_map",
    "build_swaptest_circuit",
    "cobyla_minimize",
    "compute_metrics",
    "cross_kernel_matrix",
    "decision_function",
    "density_evolve",
    "derive_seed",
    "dual_objective",
    "ensemble_counts",
    "extract_latent",
    "fit_standardizer",
    "init_kernel_params",
    "init_params",
    "inverse_gates",
    "kernel_entry",
    "kernel_matrix",
    "marginal_probabilities",
    "num_qubits_for",
    "predict",
    "preprocess",
    "qae_loss",
    "qsvc_margin_loss",
    "rng_for",
    "run",
    "sample",
    "solve_dual",
    "spsa_gradient_estimate",
    "spsa_minimize",
    "train_kernel",
    "train_qae",
    "trajectory_ensemble",
    "trajectory_run",
    "zero_state",
    "__version__",
]
