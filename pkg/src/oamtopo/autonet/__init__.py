"""From-scratch differentiable network: conv / maxpool / relu / flatten / fc /
softmax with cross-entropy, SGD and Adam, plus a parameter/FLOP estimator."""

from .flops import LayerCount, alexnet_spec, count_params_flops, format_table, ph_layer_count
from .network import (
    Conv,
    Fc,
    Flatten,
    MaxPool,
    Model,
    NetworkSpec,
    Relu,
    Softmax,
    TrainConfig,
    TrainingDiverged,
    backward,
    cross_entropy,
    forward,
    init_params,
    predict,
    train_step,
)

__all__ = [
    "Conv",
    "Fc",
    "Flatten",
    "LayerCount",
    "MaxPool",
    "Model",
    "NetworkSpec",
    "Relu",
    "Softmax",
    "TrainConfig",
    "TrainingDiverged",
    "alexnet_spec",
    "backward",
    "count_params_flops",
    "cross_entropy",
    "format_table",
    "forward",
    "init_params",
    "ph_layer_count",
    "predict",
    "train_step",
]
