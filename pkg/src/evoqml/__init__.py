"""Evolutionary (EQC) and variational (VQC) quantum classifiers on a dense statevector simulator."""

from .datasets import Dataset, SplitDataset, adhoc_generate, load_iris, minmax_scale, split
from .encoding import (
    BinaryParityEncoding,
    LossKind,
    MultiHotEncoding,
    dataset_loss,
    default_partition,
    multiclass_estimates,
    parity_estimate,
    predict_label,
)
from .evolution import CircuitGenome, GenerationRecord, MutationConfig, evolve, fitness, mutate, random_gate
from .feature_maps import FeatureMapKind, FeatureMapSpec, prepare_state, prepare_states
from .statevector import (
    Gate,
    GateKind,
    PauliZObservable,
    StateVector,
    apply_gate,
    dense_unitary_oracle,
    expectation_z,
    probabilities,
    run_circuit,
    sample_counts,
)
from .variational import (
    AnsatzSpec,
    TrainConfig,
    build_ansatz,
    cost_gradient_matrix,
    gradient_variance_probe,
    parameter_shift_gradient,
    train_vqc,
)

__version__ = "0.1.0"
