"""Adam over named parameters, with moments exposed for checkpointing."""
from __future__ import annotations

import torch


class Adam:
    """Adam (Kingma & Ba) with bias correction and a per-parameter step count.

    Parameters are addressed by name so a group can be stepped with gradients
    for only a subset of its members (the shared D/Q trunk is stepped twice per
    batch, the heads once).
    """

    def __init__(self, params: dict, lr=2e-4, betas=(0.5, 0.9), eps=1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = {k: torch.zeros_like(p) for k, p in self.params.items()}
        self.v = {k: torch.zeros_like(p) for k, p in self.params.items()}
        self.t = {k: 0 for k in self.params}

    @torch.no_grad()
    def step(self, grads: dict) -> None:
        b1, b2 = self.beta1, self.beta2
        for name, g in grads.items():
            if g is None:
                continue
            p, m, v = self.params[name], self.m[name], self.v[name]
            self.t[name] += 1
            t = self.t[name]
            m.mul_(b1).add_(g, alpha=1 - b1)
            v.mul_(b2).addcmul_(g, g, value=1 - b2)
            step_size = self.lr / (1 - b1**t)
            if step_size == 0:
                continue
            denom = (v / (1 - b2**t)).sqrt_().add_(self.eps)
            p.addcdiv_(m, denom, value=-step_size)

