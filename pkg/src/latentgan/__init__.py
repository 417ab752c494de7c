"""Autoencoder with an InfoGAN-style latent GAN learning its latent distribution."""
from .codes import CodeSpec, LatentCode, assemble, sample_code, traversal_grid
from .config import ConfigError, ExperimentConfig, OptimSettings, load_config, save_config
from .data import MixtureSpec, load_mnist, preprocess, read_idx, sample_mixture
from .estimator import LatentGANAutoencoder
from .evaluation import emit_samples, emit_traversal, evaluate_classification, fit_assignment, mmd2
from .losses import LossWeights, NoisyLabelPolicy
from .networks import build
from .presets import PRESETS, get_preset
from .training import TrainingError, init_state, train, train_step

__version__ = "0.1.0"

__all__ = [
    "CodeSpec",
    "ConfigError",
    "ExperimentConfig",
    "LatentCode",
    "LatentGANAutoencoder",
    "LossWeights",
    "MixtureSpec",
    "NoisyLabelPolicy",
    "OptimSettings",
    "PRESETS",
    "TrainingError",
    "assemble",
    "build",
    "emit_samples",
    "emit_traversal",
    "evaluate_classification",
    "fit_assignment",
    "get_preset",
    "init_state",
    "load_config",
    "load_mnist",
    "mmd2",
    "preprocess",
    "read_idx",
    "sample_code",
    "sample_mixture",
    "save_config",
    "train",
    "train_step",
    "traversal_grid",
]
