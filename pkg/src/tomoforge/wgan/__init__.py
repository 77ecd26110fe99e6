"""Adversarial tomogram generation: networks, optimizer, training loop."""

from .layers import (BatchNorm, Conv2D, ConvT2D, InstanceNorm, LeakyReLU,
                     Tanh)
from .network import (LayerOp, LayerSpec, Network, NetworkConfig, Scale,
                      build_critic, build_generator, critic_config,
                      generator_config)
from .optim import Adam
from .train import (GradientPenalty, TrainConfig, TrainLog, TrainedModel,
                    WeightClip, desk_train_config, load_model, sample,
                    save_model, train)

__all__ = [
    "BatchNorm", "Conv2D", "ConvT2D", "InstanceNorm", "LeakyReLU", "Tanh",
    "LayerOp", "LayerSpec", "Network", "NetworkConfig", "Scale",
    "build_critic", "build_generator", "critic_config", "generator_config",
    "Adam", "GradientPenalty", "TrainConfig", "TrainLog", "TrainedModel",
    "WeightClip", "desk_train_config", "load_model", "sample", "save_model",
    "train",
]
