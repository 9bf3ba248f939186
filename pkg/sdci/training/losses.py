"""Negative-ELBO terms."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from sdci.model.sdci import ForwardOutput
from sdci.schemas.experiment import ModelConfig, TrainSchedule
from sdci.tensor import ops
from sdci.tensor.tensor import Tensor, as_tensor
from sdci.utils.error_handling import ContractError, ParameterError

_EPS = 1e-16


@dataclass
class LossBreakdown:
    nll_p: Tensor
    kl: Tensor
    total: Tensor
    nll_s: Optional[Tensor] = None

    def values(self) -> dict:
        return {
            "nll_p": self.nll_p.item(),
            "nll_s": self.nll_s.item() if self.nll_s is not None else None,
            "kl": self.kl.item(),
            "total": self.total.item(),
        }

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.total.data).all())


def gaussian_nll(pred: Tensor, target, sigma2: float) -> Tensor:
    """Sum over time, objects and dims of ``0.5 [(pred - target)^2 / sigma2 + log(2 pi sigma2)]``, mean over batch."""
    if sigma2 <= 0:
        raise ParameterError(f"sigma2 must be positive, got {sigma2}", operation="gaussian_nll")
    target = as_tensor(target, like=pred)
    if pred.shape != target.shape:
        raise ContractError(
            f"prediction shape {pred.shape} does not match target shape {target.shape}", operation="gaussian_nll"
        )
    diff = pred - target
    per_element = diff * diff * (0.5 / sigma2) + 0.5 * math.log(2 * math.pi * sigma2)
    return ops.sum(per_element) * (1.0 / pred.shape[0])


def kl_categorical_uniform(posterior: Tensor) -> Tensor:
    """``sum q log(q n_e)`` over pairs, states and edge types, mean over batch."""
    posterior = as_tensor(posterior)
    num_edge_types = posterior.shape[-1]
    terms = posterior * (ops.log(posterior + _EPS) + math.log(num_edge_types))
    return ops.sum(terms) * (1.0 / posterior.shape[0])


def state_nll(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Categorical negative log-likelihood summed over time and objects, mean over batch."""
    targets = np.asarray(targets, dtype=np.int64)
    if logits.shape[:-1] != targets.shape:
        raise ContractError(
            f"state logits {logits.shape} do not match targets {targets.shape}", operation="state_nll"
        )
    log_probs = ops.log_softmax(logits, axis=-1)
    picked = log_probs * ops.one_hot(targets, logits.shape[-1], logits.dtype)
    return -ops.sum(picked) * (1.0 / logits.shape[0])


def negative_elbo(
    output: ForwardOutput, p: np.ndarray, s: Optional[np.ndarray], schedule: TrainSchedule, cfg: ModelConfig
) -> LossBreakdown:
    """``total = nll_p + lam * nll_s + kl``; nll_s only where the next states are supervised."""
    nll_p = gaussian_nll(output.rollout.predictions, np.asarray(p)[:, 1:], schedule.sigma2)
    kl = kl_categorical_uniform(output.posterior)
    total = nll_p + kl
    nll_s = None
    if cfg.predict_states and output.rollout.state_logits is not None:
        if s is None:
            raise ContractError("supervised states need the state sequence", operation="negative_elbo")
        nll_s = state_nll(output.rollout.state_logits, np.asarray(s)[:, 1:])
        total = total + nll_s * schedule.lam
    return LossBreakdown(nll_p=nll_p, kl=kl, total=total, nll_s=nll_s)
