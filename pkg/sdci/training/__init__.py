"""Negative-ELBO losses and the training loop."""

from sdci.training.losses import (
    LossBreakdown,
    gaussian_nll,
    kl_categorical_uniform,
    negative_elbo,
    state_nll,
)
from sdci.training.trainer import FitResult, Trainer, fit

__all__ = [
    "LossBreakdown",
    "gaussian_nll",
    "kl_categorical_uniform",
    "state_nll",
    "negative_elbo",
    "FitResult",
    "Trainer",
    "fit",
]
