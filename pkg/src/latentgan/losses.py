"""Reconstruction, adversarial and mutual-information losses. All reduce by mean."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .codes import LatentCode
from .networks import CodePosterior


@dataclass(frozen=True)
class LossWeights:
    """Weights of the continuous and categorical information terms."""

    lambda_cont: float = 1.0
    lambda_disc: float = 1.0

    def __post_init__(self):
        for name in ("lambda_cont", "lambda_disc"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class NoisyLabelPolicy:
    """Discriminator targets drawn uniformly from intervals near 1 (real) and 0 (fake)."""

    real_interval: tuple[float, float] = (0.8, 1.0)
    fake_interval: tuple[float, float] = (0.0, 0.2)
    enabled: bool = True

    def __post_init__(self):
        (rl, rh), (fl, fh) = self.real_interval, self.fake_interval
        if not (0.0 < rl <= rh <= 1.0):
            raise ValueError(f"real_interval {self.real_interval} must lie in (0, 1]")
        if not (0.0 <= fl <= fh < 1.0):
            raise ValueError(f"fake_interval {self.fake_interval} must lie in [0, 1)")
        if not rl > fh:
            raise ValueError("real and fake label intervals overlap")


def reconstruction_loss(x, x_hat) -> torch.Tensor:
    """Mean over the batch of the per-sample mean squared error."""
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: x {tuple(x.shape)} vs x_hat {tuple(x_hat.shape)}")
    return ((x - x_hat) ** 2).mean()


def _bce(prob, target):
    return F.binary_cross_entropy(prob, target)


def draw_targets(n: int, interval, rng, like: torch.Tensor) -> torch.Tensor:
    lo, hi = interval
    return torch.as_tensor(rng.uniform(lo, hi, size=n), dtype=like.dtype)


def d_loss(real_prob_on_data, real_prob_on_fakes, policy: NoisyLabelPolicy | None = None, seed=None):
    """Discriminator binary cross-entropy, averaged over the data and fake halves.

    With an enabled policy the per-sample targets are drawn from
    ``policy.real_interval`` / ``policy.fake_interval`` using ``seed`` (an int or a
    ``numpy.random.Generator``); otherwise targets are exactly 1 and 0.
    """
    p_real, p_fake = real_prob_on_data, real_prob_on_fakes
    if policy is not None and policy.enabled:
        rng = np.random.default_rng(seed)
        t_real = draw_targets(len(p_real), policy.real_interval, rng, p_real)
        t_fake = draw_targets(len(p_fake), policy.fake_interval, rng, p_fake)
    else:
        t_real, t_fake = torch.ones_like(p_real), torch.zeros_like(p_fake)
    return 0.5 * (_bce(p_real, t_real) + _bce(p_fake, t_fake))


def g_adv_loss(real_prob_on_fakes) -> torch.Tensor:
    """Non-saturating generator loss, mean of ``-log D(G(.))``."""
    return _bce(real_prob_on_fakes, torch.ones_like(real_prob_on_fakes))


def info_terms(posterior: CodePosterior, truth: LatentCode, weights: LossWeights):
    """Weighted categorical and continuous parts of the information loss.

    The categorical part is ``lambda_disc`` times the sum of per-code cross-entropies;
    the continuous part is ``lambda_cont`` times the MSE of the predicted means (a
    unit-variance Gaussian NLL without its constant).
    """
    if len(posterior.cat_logits) != len(truth.cat_onehots):
        raise ValueError(
            f"posterior has {len(posterior.cat_logits)} categorical heads, code has {len(truth.cat_onehots)}"
        )
    means = posterior.cont_means
    cont = truth.cont_values if truth.cont_values is not None else np.empty((len(truth), 0))
    if tuple(means.shape) != tuple(cont.shape):
        raise ValueError(f"continuous head shape {tuple(means.shape)} vs code {tuple(cont.shape)}")
    cat = means.new_zeros(())
    for i, (logits, onehot) in enumerate(zip(posterior.cat_logits, truth.cat_onehots)):
        if tuple(logits.shape) != tuple(onehot.shape):
            raise ValueError(f"cat{i} logits shape {tuple(logits.shape)} vs code {onehot.shape}")
        target = torch.as_tensor(np.argmax(onehot, axis=1))
        cat = cat + F.cross_entropy(logits, target)
    if cont.shape[1]:
        mse = F.mse_loss(means, torch.as_tensor(cont, dtype=means.dtype))
    else:
        mse = means.new_zeros(())
    return weights.lambda_disc * cat, weights.lambda_cont * mse


def info_loss(posterior: CodePosterior, truth: LatentCode, weights: LossWeights) -> torch.Tensor:
    cat, cont = info_terms(posterior, truth, weights)
    return cat + cont
