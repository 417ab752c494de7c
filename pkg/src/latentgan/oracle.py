"""Latent GAN trained alone against a known Gaussian mixture.

With the autoencoder removed, the "real" latents come from :func:`sample_mixture`
so distribution matching (MMD) and code/mode alignment (purity) can be checked
against ground truth.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .codes import CodeSpec, assemble, sample_code
from .data import MixtureSpec, sample_mixture
from .losses import LossWeights, NoisyLabelPolicy, d_loss, g_adv_loss, info_terms
from .networks import CodePosterior, DiscriminatorQ, Stack
from .optim import Adam
from .presets import parse_heads, parse_layer


class OracleFailure(RuntimeError):
    pass


@dataclass
class OracleReport:
    mmd2: float
    untrained_mmd2: float
    bandwidth: float
    purity: float
    purity_per_class: list[float]
    purity_sigma: float
    baseline: float
    mode_counts: list[int]
    losses: list[dict] = field(default_factory=list, repr=False)
    generated: np.ndarray | None = field(default=None, repr=False)

    def rows(self):
        yield "mmd2", self.mmd2
        yield "untrained_mmd2", self.untrained_mmd2
        yield "bandwidth", self.bandwidth
        yield "purity", self.purity
        yield "purity_sigma", self.purity_sigma
        yield "baseline", self.baseline
        for i, p in enumerate(self.purity_per_class):
            yield f"purity_cat{i}", p

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "value"])
            for k, v in self.rows():
                w.writerow([k, repr(float(v))])


class OracleNets(torch.nn.Module):
    def __init__(self, spec: CodeSpec, dim: int, width: int):
        super().__init__()
        self.gen = Stack([parse_layer(f"fc-o{width}-r"), parse_layer(f"fc-o{width}-r"), parse_layer(f"fc-o{dim}")], spec.input_dim)
        heads = parse_heads(",".join(["fc-o1-sig"] + [f"fc-o{k}" for k in spec.categoricals]))
        self.dq = DiscriminatorQ([parse_layer(f"fc-o{width}-r")] * 2, heads, dim, 0)


def nearest_mode(points, means) -> np.ndarray:
    d = ((points[:, None, :] - means[None, :, :]) ** 2).sum(-1)
    return d.argmin(axis=1)


def purity(classes, modes, k: int, n_modes: int):
    """Held-out purity of the class -> modal-mean relation.

    The modal mean of each class is chosen on the first half of the samples and
    scored on the second half, so an uninformative code scores ``~1/n_modes``
    instead of the optimistic in-sample maximum.

    Returns:
        ``(overall, per_class, n_scored)``
    """
    half = len(classes) // 2
    per_class, hits, total = [], 0, 0
    for c in range(k):
        fit = modes[:half][classes[:half] == c]
        score = modes[half:][classes[half:] == c]
        if len(fit) == 0 or len(score) == 0:
            per_class.append(0.0)
            total += len(score)
            continue
        modal = np.bincount(fit, minlength=n_modes).argmax()
        h = int((score == modal).sum())
        per_class.append(h / len(score))
        hits += h
        total += len(score)
    return hits / max(total, 1), per_class, total


def run_oracle(
    spec: MixtureSpec | None = None,
    code_k: int = 8,
    steps: int = 5000,
    seed: int = 0,
    lambda_disc: float = 1.0,
    noise_dim: int = 2,
    width: int = 128,
    batch_size: int = 256,
    learning_rate: float = 1e-3,
    betas=(0.5, 0.9),
    n_eval: int = 10_000,
    noisy_labels: NoisyLabelPolicy | None = None,
) -> OracleReport:
    """Train a small fc G and D/Q on mixture samples and score the result."""
    spec = MixtureSpec.ring() if spec is None else spec
    if code_k < 2:
        raise ValueError(f"code_k must be >= 2, got {code_k}")
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    noisy_labels = NoisyLabelPolicy() if noisy_labels is None else noisy_labels
    codes = CodeSpec(noise_dim, (code_k,), ())
    weights = LossWeights(lambda_cont=0.0, lambda_disc=lambda_disc)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        nets = OracleNets(codes, spec.dim, width).double()
    rng = np.random.default_rng(seed)
    eval_rng_seed = [seed, 1]
    real_eval = sample_mixture(spec, n_eval, [seed, 2])

    def generate(n, r):
        code = sample_code(codes, r, n=n)
        with torch.no_grad():
            out = nets.gen(torch.as_tensor(assemble(code, codes)))
        return out.numpy(), code.cat_indices()[0]

    untrained, _ = generate(n_eval, np.random.default_rng(eval_rng_seed))
    from .evaluation import median_bandwidth, mmd2

    bw = median_bandwidth(real_eval)
    untrained_mmd = mmd2(real_eval, untrained, bw).value

    g_params = dict(nets.gen.named_parameters())
    d_params = dict(nets.dq.trunk.named_parameters(prefix="trunk"))
    d_params.update(nets.dq.d_head.named_parameters(prefix="d_head"))
    q_params = dict(nets.dq.trunk.named_parameters(prefix="trunk"))
    q_params.update(nets.dq.cat_heads.named_parameters(prefix="cat_heads"))
    opt_g = Adam(g_params, lr=learning_rate, betas=betas)
    opt_dq = Adam({**d_params, **q_params}, lr=learning_rate, betas=betas)

    losses = []
    for step in range(1, steps + 1):
        real = torch.as_tensor(sample_mixture(spec, batch_size, rng))
        code = sample_code(codes, rng, n=batch_size)
        with torch.no_grad():
            fake = nets.gen(torch.as_tensor(assemble(code, codes)))
        logit, _, _ = nets.dq(torch.cat([real, fake]))
        prob = torch.sigmoid(logit)
        ld = d_loss(prob[:batch_size], prob[batch_size:], noisy_labels, rng)
        names = list(d_params)
        opt_dq.step(dict(zip(names, torch.autograd.grad(ld, [d_params[k] for k in names]))))

        code = sample_code(codes, rng, n=batch_size)
        logit, cont, cats = nets.dq(nets.gen(torch.as_tensor(assemble(code, codes))))
        lg = g_adv_loss(torch.sigmoid(logit))
        cat_term, _ = info_terms(CodePosterior(cats, cont), code, weights)
        names = list(g_params)
        opt_g.step(dict(zip(names, torch.autograd.grad(lg + cat_term, [g_params[k] for k in names], retain_graph=True))))
        if lambda_disc > 0:
            names = list(q_params)
            opt_dq.step(dict(zip(names, torch.autograd.grad(cat_term, [q_params[k] for k in names]))))
        row = {"step": step, "loss_d": ld.item(), "loss_g_adv": lg.item(), "loss_info_cat": cat_term.item()}
        if not all(math.isfinite(v) for v in row.values()):
            raise OracleFailure(f"non-finite loss at step {step}: {row}")
        losses.append(row)

    generated, classes = generate(n_eval, np.random.default_rng(eval_rng_seed))
    modes = nearest_mode(generated, spec.component_means)
    n_modes = len(spec.component_means)
    overall, per_class, n_scored = purity(classes, modes, code_k, n_modes)
    base = 1.0 / n_modes
    return OracleReport(
        mmd2=mmd2(real_eval, generated, bw).value,
        untrained_mmd2=untrained_mmd,
        bandwidth=bw,
        purity=overall,
        purity_per_class=per_class,
        purity_sigma=math.sqrt(base * (1 - base) / max(n_scored, 1)),
        baseline=base,
        mode_counts=np.bincount(modes, minlength=n_modes).tolist(),
        losses=losses,
        generated=generated,
    )


def save_scatter(points, spec: MixtureSpec, path) -> None:
    """Optional 2-D scatter of generated points over the mixture means."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4, 4))
    ax.scatter(points[:, 0], points[:, 1], s=1, alpha=0.3)
    ax.scatter(spec.component_means[:, 0], spec.component_means[:, 1], c="r", marker="x")
    ax.set_aspect("equal")
    fig.savefig(Path(path), dpi=100)
    plt.close(fig)
