"""Quantum-trained CNN: statevector QNN simulation, quantum-to-classical
parameter generation, and the training pipeline."""

from ._qtcnn import (
    CnnArchitecture,
    NumericError,
    QtcnnError,
    TrainConfig,
    bce_loss,
    build_mapping_input,
    cnn_forward,
    config_from_json,
    count_cnn_params,
    generate_theta,
    grad_parameter_shift,
    grad_probabilities,
    mapping_param_count,
    params_report,
    prepare_manifest,
    required_qubits,
    run_qnn,
    sample_shots,
    synth_generate,
    train,
)

__all__ = [
    "CnnArchitecture",
    "NumericError",
    "QtcnnError",
    "TrainConfig",
    "bce_loss",
    "build_mapping_input",
    "cnn_forward",
    "config_from_json",
    "count_cnn_params",
    "generate_theta",
    "grad_parameter_shift",
    "grad_probabilities",
    "mapping_param_count",
    "params_report",
    "prepare_manifest",
    "required_qubits",
    "run_qnn",
    "sample_shots",
    "synth_generate",
    "train",
]
