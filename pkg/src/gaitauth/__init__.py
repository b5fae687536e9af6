"""Accelerometer-gait authentication toolkit.

Trains per-user binary authentication models over gait feature vectors,
attacks them with zero-effort and uniform random-vector probes, and hardens
them with two impostor-augmentation strategies: beta-distributed noise
around the genuine user's feature means, and a conditional tabular GAN fit
to the real impostor pool.
"""

__version__ = "0.1.0"
