"""Encoder, decoder, latent generator and the shared-trunk discriminator/Q network."""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .presets import ArchPreset, LayerSpec, get_preset, parse_heads, parse_layer


class ArchitectureError(ValueError):
    """A layer table does not describe a consistent network."""


@dataclass
class CodePosterior:
    """Q network output: one logit vector per categorical, one mean per continuous code."""

    cat_logits: list[torch.Tensor]
    cont_means: torch.Tensor


@lru_cache(maxsize=None)
def _interp_matrix(n: int, factor: int, dtype: torch.dtype) -> torch.Tensor:
    """Row weights of 1-D bilinear upsampling (half-pixel centers, edge clamped)."""
    out = torch.zeros(n * factor, n, dtype=torch.float64)
    for i in range(n * factor):
        src = max((i + 0.5) / factor - 0.5, 0.0)
        lo = min(int(src), n - 1)
        hi = min(lo + 1, n - 1)
        out[i, lo] += 1.0 - (src - lo)
        out[i, hi] += src - lo
    return out.to(dtype)


def upsample_bilinear(x: torch.Tensor, factor: int) -> torch.Tensor:
    """Same result as ``F.interpolate(..., mode="bilinear", align_corners=False)``.

    Written as two small matmuls, which is several times faster on CPU.
    """
    rows = _interp_matrix(x.shape[-2], factor, x.dtype)
    cols = _interp_matrix(x.shape[-1], factor, x.dtype)
    return torch.matmul(torch.matmul(rows, x), cols.T)


class Block(nn.Module):
    """One table row: [relu] [upsample] conv|fc [batchnorm] [activation]."""

    def __init__(self, spec: LayerSpec, in_width: int):
        super().__init__()
        self.spec = spec
        if spec.kind == "conv":
            self.layer = nn.Conv2d(in_width, spec.out, spec.kernel, spec.stride, spec.padding)
            self.bn = nn.BatchNorm2d(spec.out) if spec.batchnorm else None
        else:
            self.layer = nn.Linear(in_width, spec.out)
            self.bn = nn.BatchNorm1d(spec.out) if spec.batchnorm else None

    def forward(self, x):
        s = self.spec
        if s.pre_relu:
            x = F.relu(x)
        if s.upsample > 1:
            x = upsample_bilinear(x, s.upsample)
        if s.kind == "fc" and x.dim() > 2:
            x = x.flatten(1)
        x = self.layer(x)
        if self.bn is not None:
            x = self.bn(x)
        if s.activation == "relu":
            x = F.relu(x)
        elif s.activation == "tanh":
            x = torch.tanh(x)
        elif s.activation == "sigmoid":
            x = torch.sigmoid(x)
        return x


class Stack(nn.Module):
    def __init__(self, specs, in_width):
        super().__init__()
        blocks = []
        for spec in specs:
            blocks.append(Block(spec, in_width))
            in_width = spec.out
        self.blocks = nn.ModuleList(blocks)

    def forward(self, x):
        for block in self.blocks:
            x = block(x)
        return x


class Decoder(Stack):
    def forward(self, z):
        return super().forward(z.reshape(z.shape[0], -1, 1, 1))


class DiscriminatorQ(nn.Module):
    """Fully connected trunk with a real/fake head and the Q code heads on top."""

    def __init__(self, trunk_specs, head_specs, latent_dim, n_continuous):
        super().__init__()
        self.trunk = Stack(trunk_specs, latent_dim)
        width = trunk_specs[-1].out if trunk_specs else latent_dim
        self.d_head = nn.Linear(width, head_specs[0].out)
        rest = head_specs[1:]
        self.cont_head = None
        if n_continuous:
            self.cont_head = nn.Linear(width, rest[0].out)
            rest = rest[1:]
        self.cat_heads = nn.ModuleList(nn.Linear(width, h.out) for h in rest)

    def forward(self, z):
        """Return the D logit ``(n,)``, continuous means ``(n, m)`` and categorical logits."""
        h = self.trunk(z)
        logit = self.d_head(h)[:, 0]
        if self.cont_head is not None:
            cont = self.cont_head(h)
        else:
            cont = h.new_zeros((h.shape[0], 0))
        return logit, cont, [head(h) for head in self.cat_heads]

    def head_modules(self) -> list[nn.Module]:
        heads = [self.d_head]
        if self.cont_head is not None:
            heads.append(self.cont_head)
        return heads + list(self.cat_heads)

    def q_parameters(self) -> list[nn.Parameter]:
        """Parameters of the Q heads (the trunk is shared with D and not included)."""
        mods = list(self.cat_heads) + ([self.cont_head] if self.cont_head is not None else [])
        return [p for m in mods for p in m.parameters()]


class NetworkBundle(nn.Module):
    """Enc, Dec, G and the shared D/Q network for one preset."""

    def __init__(self, preset: ArchPreset):
        super().__init__()
        self.preset = preset
        c, h, w = preset.image_shape
        spec = preset.code_spec
        enc = [parse_layer(t) for t in preset.enc]
        dec = [parse_layer(t) for t in preset.dec]
        gen = [parse_layer(t) for t in preset.gen]
        trunk = [parse_layer(t) for t in preset.dq]
        heads = parse_heads(preset.dq_heads)
        _check_encoder(enc, preset)
        _check_decoder(dec, preset)
        _check_fc(gen, "gen", preset.latent_dim)
        _check_heads(heads, preset)
        self.enc = Stack(enc, c)
        self.dec = Decoder(dec, preset.latent_dim)
        self.gen = Stack(gen, spec.input_dim)
        self.dq = DiscriminatorQ(trunk, heads, preset.latent_dim, spec.n_continuous)

    @property
    def dtype(self):
        return next(self.parameters()).dtype

    def named_tensors(self) -> "OrderedDict[str, torch.Tensor]":
        """Checkpoint view: ``{net}.{layer}.{weight|bias|bn_gamma|bn_beta|bn_mean|bn_var}``."""
        out = OrderedDict()
        for net, blocks in (
            ("enc", self.enc.blocks),
            ("dec", self.dec.blocks),
            ("gen", self.gen.blocks),
            ("dq", list(self.dq.trunk.blocks) + self.dq.head_modules()),
        ):
            for i, block in enumerate(blocks):
                layer = block.layer if isinstance(block, Block) else block
                out[f"{net}.{i}.weight"] = layer.weight
                out[f"{net}.{i}.bias"] = layer.bias
                bn = getattr(block, "bn", None)
                if bn is not None:
                    out[f"{net}.{i}.bn_gamma"] = bn.weight
                    out[f"{net}.{i}.bn_beta"] = bn.bias
                    out[f"{net}.{i}.bn_mean"] = bn.running_mean
                    out[f"{net}.{i}.bn_var"] = bn.running_var
        return out


def _spatial_error(net, i, text, detail):
    return ArchitectureError(f"{net} layer {i} ({text}): {detail}")


def _check_encoder(specs, preset):
    c, h, w = preset.image_shape
    if h != w:
        raise ArchitectureError(f"square images only, got {h}x{w}")
    size = h
    convs = [s for s in specs if s.kind == "conv"]
    for i, s in enumerate(convs):
        span = size + 2 * s.padding - s.kernel
        if span < 0 or span % s.stride:
            raise _spatial_error("enc", i, preset.enc[i], f"does not tile a {size}x{size} input")
        size = span // s.stride + 1
    if size != 1:
        raise _spatial_error(
            "enc", len(convs) - 1, preset.enc[len(convs) - 1], f"conv chain ends at {size}x{size}, not 1x1"
        )
    if specs[-1].kind != "fc" or specs[-1].out != preset.latent_dim or specs[-1].activation:
        raise _spatial_error("enc", len(specs) - 1, preset.enc[-1], "must be a linear fc to latent_dim")


def _check_decoder(specs, preset):
    c, h, _ = preset.image_shape
    size = 1
    for i, s in enumerate(specs):
        if s.kind != "conv" or s.stride != 1:
            raise _spatial_error("dec", i, preset.dec[i], "decoder rows must be stride-1 convolutions")
        size = size * s.upsample + 2 * s.padding - s.kernel + 1
        if size < 1:
            raise _spatial_error("dec", i, preset.dec[i], "spatial size collapses")
    if size != h:
        raise _spatial_error("dec", len(specs) - 1, preset.dec[-1], f"reaches {size}x{size}, not {h}x{h}")
    if specs[-1].out != c or specs[-1].activation != "tanh":
        raise _spatial_error("dec", len(specs) - 1, preset.dec[-1], f"must emit {c} tanh channels")


def _check_fc(specs, net, out):
    if specs[-1].out != out or specs[-1].activation:
        raise ArchitectureError(f"{net} must end in a linear layer of width {out}")


def _check_heads(heads, preset):
    spec = preset.code_spec
    want = [1] + ([spec.n_continuous] if spec.n_continuous else []) + list(spec.categoricals)
    got = [h.out for h in heads]
    if got != want or heads[0].activation != "sigmoid":
        raise ArchitectureError(f"dq heads {preset.dq_heads!r} give widths {got}, code layout needs {want}")


def build(preset, init_seed: int = 0, dtype=torch.float32) -> NetworkBundle:
    """Construct all four networks with the framework's default fan-in initialization."""
    if isinstance(preset, str):
        preset = get_preset(preset)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(init_seed)
        bundle = NetworkBundle(preset)
    return bundle.to(dtype)


def _as_tensor(bundle, x):
    if isinstance(x, torch.Tensor):
        return x.to(bundle.dtype)
    return torch.as_tensor(np.asarray(x), dtype=bundle.dtype)


def encode(bundle: NetworkBundle, images) -> torch.Tensor:
    x = _as_tensor(bundle, images)
    want = tuple(bundle.preset.image_shape)
    if x.dim() != 4 or tuple(x.shape[1:]) != want:
        raise ValueError(f"images have shape {tuple(x.shape)}, expected (n, {', '.join(map(str, want))})")
    return bundle.enc(x)


def decode(bundle: NetworkBundle, latents) -> torch.Tensor:
    z = _as_tensor(bundle, latents)
    _check_width(z, bundle.preset.latent_dim, "latents")
    return bundle.dec(z)


def generate(bundle: NetworkBundle, inputs) -> torch.Tensor:
    x = _as_tensor(bundle, inputs)
    _check_width(x, bundle.preset.code_spec.input_dim, "generator inputs")
    return bundle.gen(x)


def discriminate(bundle: NetworkBundle, latents) -> tuple[torch.Tensor, CodePosterior]:
    """Real-data probability and Q posterior, both from one trunk pass."""
    z = _as_tensor(bundle, latents)
    _check_width(z, bundle.preset.latent_dim, "latents")
    logit, cont, cats = bundle.dq(z)
    return torch.sigmoid(logit), CodePosterior(cat_logits=cats, cont_means=cont)


def _check_width(x, width, what):
    if x.dim() != 2 or x.shape[1] != width:
        raise ValueError(f"{what} have shape {tuple(x.shape)}, expected (n, {width})")
