"""Joint training of the autoencoder and the latent GAN with its Q network."""
from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .codes import assemble, sample_code
from .config import ExperimentConfig, OptimSettings
from .data import iterate_minibatches, load_mnist, preprocess
from .losses import d_loss, g_adv_loss, info_terms, reconstruction_loss
from .networks import CodePosterior, NetworkBundle, build
from .optim import Adam

__all__ = [
    "METRIC_FIELDS",
    "OptimSettings",
    "TrainState",
    "TrainingError",
    "init_state",
    "load_images",
    "run_epochs",
    "train",
    "train_step",
]

log = logging.getLogger(__name__)

METRIC_FIELDS = ("step", "epoch", "loss_ae", "loss_d", "loss_g_adv", "loss_info_cat", "loss_info_cont")


class TrainingError(RuntimeError):
    def __init__(self, loss_name, step, value):
        super().__init__(f"non-finite {loss_name} ({value}) at step {step}")
        self.loss_name = loss_name
        self.step = step


@dataclass
class TrainState:
    """Everything needed to continue training bit-for-bit."""

    bundle: NetworkBundle
    optimizers: dict  # "ae", "dq", "g" -> Adam
    config: ExperimentConfig
    rng: np.random.Generator
    step: int = 0
    steps_per_epoch: int = 0


def param_groups(bundle: NetworkBundle) -> dict:
    params = {n: t for n, t in bundle.named_tensors().items() if isinstance(t, torch.nn.Parameter)}
    return {
        "ae": {n: p for n, p in params.items() if n.startswith(("enc.", "dec."))},
        "dq": {n: p for n, p in params.items() if n.startswith("dq.")},
        "g": {n: p for n, p in params.items() if n.startswith("gen.")},
    }


def init_state(config: ExperimentConfig, dtype=torch.float32) -> TrainState:
    bundle = build(config.preset, init_seed=config.seed, dtype=dtype)
    bundle.train()
    o = config.optim
    optimizers = {
        name: Adam(group, lr=o.learning_rate, betas=(o.beta1, o.beta2))
        for name, group in param_groups(bundle).items()
    }
    return TrainState(bundle, optimizers, config, np.random.default_rng(config.seed))


def _check(name, value, step):
    v = float(value.detach()) if torch.is_tensor(value) else float(value)
    if not math.isfinite(v):
        raise TrainingError(name, step, v)
    return v


def train_step(state: TrainState, batch) -> tuple[TrainState, dict]:
    """One simultaneous update: autoencoder, then D, then G together with Q.

    The encoder output is used by D as fixed "real" data, so the encoder only ever
    receives gradient from the reconstruction loss. In the G/Q update the
    generator follows ``g_adv + info`` while the shared trunk and the Q heads
    follow ``info`` alone, so the adversarial term never trains the discriminator.
    """
    bundle, cfg, rng = state.bundle, state.config, state.rng
    spec = cfg.codes
    step = state.step + 1
    x = batch if isinstance(batch, torch.Tensor) else torch.as_tensor(np.asarray(batch))
    x = x.to(bundle.dtype)
    want = tuple(bundle.preset.image_shape)
    if x.dim() != 4 or tuple(x.shape[1:]) != want:
        raise ValueError(f"batch has shape {tuple(x.shape)}, expected (n, {', '.join(map(str, want))})")
    n = x.shape[0]
    bundle.train()
    groups = param_groups(bundle)

    # (a) autoencoder
    loss_ae = reconstruction_loss(x, bundle.dec(bundle.enc(x)))
    values = {"loss_ae": _check("loss_ae", loss_ae, step)}
    ae_names = list(groups["ae"])
    grads = torch.autograd.grad(loss_ae, [groups["ae"][k] for k in ae_names])
    state.optimizers["ae"].step(dict(zip(ae_names, grads)))

    # (b) discriminator: Enc(X) is the data distribution, G(P, c) the fakes
    with torch.no_grad():
        z_real = bundle.enc(x)
        z_fake = bundle.gen(_inputs(spec, n, rng, bundle.dtype)[0])
    logit, _, _ = bundle.dq(torch.cat([z_real, z_fake]))
    prob = torch.sigmoid(logit)
    loss_d = d_loss(prob[:n], prob[n:], cfg.noisy_labels, rng)
    values["loss_d"] = _check("loss_d", loss_d, step)
    d_params = {k: p for k, p in groups["dq"].items() if _is_d_param(bundle, k)}
    d_names = list(d_params)
    grads = torch.autograd.grad(loss_d, [d_params[k] for k in d_names])
    state.optimizers["dq"].step(dict(zip(d_names, grads)))

    # (c) generator + Q on fresh codes
    inputs, code = _inputs(spec, n, rng, bundle.dtype)
    logit, cont, cats = bundle.dq(bundle.gen(inputs))
    loss_g = g_adv_loss(torch.sigmoid(logit))
    cat_term, cont_term = info_terms(CodePosterior(cats, cont), code, cfg.loss)
    info = cat_term + cont_term
    values["loss_g_adv"] = _check("loss_g_adv", loss_g, step)
    values["loss_info_cat"] = _check("loss_info_cat", cat_term, step)
    values["loss_info_cont"] = _check("loss_info_cont", cont_term, step)
    g_names = list(groups["g"])
    g_grads = torch.autograd.grad(loss_g + info, [groups["g"][k] for k in g_names], retain_graph=True)
    q_params = {k: p for k, p in groups["dq"].items() if not k.startswith(_d_head_prefix(bundle))}
    q_names = list(q_params)
    q_grads = torch.autograd.grad(info, [q_params[k] for k in q_names], allow_unused=True)
    state.optimizers["g"].step(dict(zip(g_names, g_grads)))
    state.optimizers["dq"].step(dict(zip(q_names, q_grads)))

    state.step = step
    metrics = {
        "step": step,
        "epoch": (step - 1) // state.steps_per_epoch if state.steps_per_epoch else 0,
        **values,
    }
    return state, metrics


def _d_head_prefix(bundle):
    return f"dq.{len(bundle.dq.trunk.blocks)}."


def _is_d_param(bundle, name):
    """Trunk rows and the real/fake head; the Q heads sit after them."""
    return int(name.split(".")[1]) <= len(bundle.dq.trunk.blocks)


def _inputs(spec, n, rng, dtype):
    code = sample_code(spec, rng, n=n)
    return torch.as_tensor(assemble(code, spec), dtype=dtype), code


def run_epochs(state: TrainState, images: np.ndarray, epochs: int, on_step=None, max_steps=None) -> list[dict]:
    """Train on preprocessed ``images`` until ``epochs`` full epochs are done.

    Resumes mid-epoch from ``state.step``. Each epoch visits ``floor(N / batch)``
    batches in an order fixed by ``(seed, epoch)``. Stops early once
    ``state.step`` reaches ``max_steps``.
    """
    bs = state.config.optim.batch_size
    per_epoch = len(images) // bs
    if per_epoch == 0:
        raise ValueError(f"{len(images)} images cannot fill one batch of {bs}")
    state.steps_per_epoch = per_epoch
    metrics = []
    start_epoch, offset = divmod(state.step, per_epoch)
    for epoch in range(start_epoch, epochs):
        for i, idx in enumerate(iterate_minibatches(len(images), bs, state.config.seed, epoch)):
            if epoch == start_epoch and i < offset:
                continue
            if max_steps is not None and state.step >= max_steps:
                return metrics
            _, m = train_step(state, images[idx])
            metrics.append(m)
            if on_step is not None:
                on_step(state, m)
    return metrics


def load_images(path, labels_path=None, preset=None):
    """Read an IDX image file and preprocess it for ``preset`` (default from caller)."""
    raw = load_mnist(path, labels_path)
    size = preset.image_shape[1] if preset is not None else 32
    return preprocess(raw, size), raw.labels


def output_dir(config: ExperimentConfig) -> Path:
    return Path(os.environ.get("LATENTGAN_OUT") or config.output_dir)


def train(config: ExperimentConfig, resume=None, max_steps=None):
    """Train from ``config`` (or from checkpoint ``resume``), writing artifacts.

    Writes ``metrics.csv`` (one row per step), ``checkpoints/step_XXXXXXXX.lgc`` every
    ``checkpoint_interval`` steps and ``checkpoint.lgc`` at the end.

    Returns:
        ``(state, metrics)`` where ``metrics`` lists the rows produced by this call.
    """
    from .checkpoint import load_checkpoint, save_checkpoint
    from .presets import get_preset

    out = output_dir(config)
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    if config.train_images is None:
        raise FileNotFoundError("config has no train_images path")
    if not Path(config.train_images).exists():
        raise FileNotFoundError(f"training images not found: {config.train_images}")
    images, _ = load_images(config.train_images, preset=get_preset(config.preset))

    if resume is not None:
        state = load_checkpoint(resume)
        if state.config.preset != config.preset:
            raise ValueError(f"checkpoint preset {state.config.preset!r} differs from config {config.preset!r}")
        state.config = config
        mode = "a"
    else:
        state = init_state(config)
        mode = "w"
    metrics_path = out / "metrics.csv"
    fh = open(metrics_path, mode, encoding="utf-8", newline="")
    writer = csv.DictWriter(fh, fieldnames=METRIC_FIELDS, lineterminator="\n")
    if mode == "w" or metrics_path.stat().st_size == 0:
        writer.writeheader()
    interval = config.checkpoint_interval

    def on_step(st, m):
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in m.items()})
        if st.step % interval == 0:
            fh.flush()
            save_checkpoint(st, ckpt_dir / f"step_{st.step:08d}.lgc")
        if st.step % 100 == 0:
            log.info("step %d epoch %d ae %.4f d %.4f g %.4f cat %.4f cont %.4f", *m.values())

    try:
        metrics = run_epochs(state, images, config.optim.epochs, on_step=on_step, max_steps=max_steps)
    finally:
        fh.close()
    save_checkpoint(state, out / "checkpoint.lgc")
    return state, metrics

