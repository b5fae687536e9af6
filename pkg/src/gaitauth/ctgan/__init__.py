"""Conditional tabular GAN for synthesizing impostor feature rows.

Public surface: mixture fitting (mode-specific normalization), row
encoding/decoding, conditional-vector sampling, the generator/critic pair,
WGAN-GP training, sampling, and model persistence.
"""

from .conditional import (CondSampler, build_cond_sampler, sample_cond,
                          sample_cond_batch)
from .encoding import build_layout, decode_rows, encode_rows
from .mixture import (ColumnMixture, ModeNormalizer, fit_column_mixture,
                      fit_mode_normalizer)
from .networks import Critic, Generator, critic_forward
from .training import (SynthModel, TrainConfig, generate, gradient_penalty,
                       load_synth_model, save_synth_model, train_synth_model)

__all__ = [
    "ColumnMixture", "ModeNormalizer", "fit_column_mixture",
    "fit_mode_normalizer", "build_layout", "decode_rows", "encode_rows",
    "CondSampler", "build_cond_sampler", "sample_cond", "sample_cond_batch",
    "Critic", "Generator", "critic_forward", "SynthModel", "TrainConfig",
    "generate", "gradient_penalty", "load_synth_model", "save_synth_model",
    "train_synth_model",
]
