"""Architecture presets written in the compact layer notation of the original tables.

Notation: ``c`` convolution (kernel), ``o`` output width, ``s`` stride, ``p`` padding,
``u`` bilinear upsampling factor, ``bn`` batch norm, ``r`` relu (leading ``r``
applies before the layer), ``sig`` sigmoid, ``tanh``. Heads of the D/Q network
are comma-separated; ``3x(fc-o20)`` repeats a head.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .codes import CodeSpec


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # "conv" or "fc"
    out: int
    kernel: int = 1
    stride: int = 1
    padding: int = 0
    upsample: int = 1
    pre_relu: bool = False
    batchnorm: bool = False
    activation: str | None = None  # "relu", "tanh", "sigmoid" or None


_TOKEN = re.compile(r"^(c|o|s|p|u|bn)(\d+)$")


def parse_layer(text: str) -> LayerSpec:
    """Parse one table cell such as ``r-u4-c3-o128-p1-bn128-r``."""
    tokens = text.strip().split("-")
    kind, out, kernel, stride, padding, upsample = None, None, 1, 1, None, 1
    pre_relu, bn, act = False, False, None
    for pos, tok in enumerate(tokens):
        if tok in ("r", "relu"):
            if pos == 0:
                pre_relu = True
            else:
                act = "relu"
            continue
        if tok in ("sig", "sigmoid", "tanh"):
            act = "sigmoid" if tok.startswith("sig") else "tanh"
            continue
        if tok == "fc":
            kind = "fc"
            continue
        m = _TOKEN.match(tok)
        if m is None:
            raise ValueError(f"cannot parse token {tok!r} in layer {text!r}")
        key, val = m.group(1), int(m.group(2))
        if key == "c":
            kind, kernel = "conv", val
        elif key == "o":
            out = val
        elif key == "s":
            stride = val
        elif key == "p":
            padding = val
        elif key == "u":
            upsample = val
        else:
            # a bn width that disagrees with the conv width is ignored; normalize over the conv output
            bn = True
    if kind is None or out is None:
        raise ValueError(f"layer {text!r} needs a kind (c/fc) and an output width (o)")
    if padding is None:
        padding = max(kernel - stride, 0) // 2 if kind == "conv" else 0
    return LayerSpec(kind, out, kernel, stride, padding, upsample, pre_relu, bn, act)


def parse_heads(text: str) -> list[LayerSpec]:
    """Parse a heads cell such as ``fc-o1-sig,(fc-o2),3x(fc-o20)``."""
    heads = []
    for part in text.split(","):
        part = part.strip()
        m = re.match(r"^(?:(\d+)x)?\(?([^()]+)\)?$", part)
        if m is None:
            raise ValueError(f"cannot parse head {part!r}")
        heads.extend([parse_layer(m.group(2))] * int(m.group(1) or 1))
    return heads


@dataclass(frozen=True)
class ArchPreset:
    """Complete architecture description for one dataset.

    ``dq`` lists the shared trunk rows; ``dq_heads`` is the final heads cell, in
    the order D (sigmoid), continuous means (if any), one head per categorical.
    """

    name: str
    image_shape: tuple[int, int, int]
    latent_dim: int
    code_spec: CodeSpec
    enc: tuple[str, ...]
    dec: tuple[str, ...]
    dq: tuple[str, ...]
    dq_heads: str
    gen: tuple[str, ...]
    lambda_cont: float = 1.0
    lambda_disc: float = 1.0


MNIST = ArchPreset(
    name="mnist",
    image_shape=(1, 32, 32),
    latent_dim=64,
    code_spec=CodeSpec(64, (10,), ((-1.0, 1.0), (-1.0, 1.0))),
    enc=("c4-o16-s2-r", "c4-o32-s2-r", "c4-o64-s2-r", "c4-o128-s2-r", "c4-o128-s2-r", "fc-o64"),
    # single-channel output to match the images
    dec=("r-u4-c3-o128-p1-bn128-r", "u2-c3-o64-p1-bn64-r", "u2-c3-o32-p1-bn32-r", "u2-c3-o1-p1-tanh"),
    dq=("fc-o1000-r", "fc-o1000-r", "fc-o512-r"),
    dq_heads="fc-o1-sig,fc-o2,fc-o10",
    gen=("fc-o1000-r", "fc-o1000-r", "fc-o1000-r", "fc-o64"),
    lambda_cont=1.0,
    lambda_disc=0.1,
)

CHAIR3D = ArchPreset(
    name="chair3d",
    image_shape=(1, 64, 64),
    latent_dim=128,
    code_spec=CodeSpec(128, (20, 20, 20), ((-1.0, 1.0), (-1.0, 1.0))),
    enc=(
        "c4-o64-s2-r", "c4-o128-s2-r", "c4-o256-s2-r", "c4-o512-s2-r",
        "c4-o1024-s2-r", "c4-o128-s2-r", "fc-o128",
    ),
    dec=(
        "r-u4-c3-o512-p1-bn128-r", "u2-c3-o256-p1-bn64-r", "u2-c3-o128-p1-bn32-r",
        "u2-c3-o64-p1-bn32-r", "u2-c3-o1-p1-tanh",
    ),
    dq=("fc-o3000-r", "fc-o3000-r", "fc-o3000-r", "fc-o512-r"),
    dq_heads="fc-o1-sig,(fc-o2),3x(fc-o20)",
    gen=("fc-o3000-r", "fc-o3000-r", "fc-o3000-r", "fc-o3000-r", "fc-o128"),
    lambda_cont=1.0,
    lambda_disc=10.0,
)

CELEBA = ArchPreset(
    name="celeba",
    image_shape=(3, 32, 32),
    latent_dim=128,
    code_spec=CodeSpec(128, (10,) * 10, ()),
    enc=("c4-o64-s2-r", "c4-o128-s2-r", "c4-o256-s2-r", "c4-o512-s2-r", "c4-o128-s2-r", "fc-o128"),
    dec=("r-u4-c3-o512-p1-bn128-r", "u2-c3-o256-p1-bn64-r", "u2-c3-o128-p1-bn32-r", "u2-c3-o3-p1-tanh"),
    dq=("fc-o3000-r", "fc-o3000-r", "fc-o3000-r", "fc-o512-r"),
    dq_heads="fc-o1-sig,10x(fc-o10)",
    gen=("fc-o3000-r", "fc-o3000-r", "fc-o3000-r", "fc-o3000-r", "fc-o128"),
    lambda_cont=1.0,
    lambda_disc=1.0,
)

# Small enough for finite-difference gradient checks and fast smoke runs.
TINY = ArchPreset(
    name="tiny",
    image_shape=(1, 4, 4),
    latent_dim=8,
    code_spec=CodeSpec(4, (3,), ((-1.0, 1.0),)),
    enc=("c4-o4-s2-r", "c4-o8-s2-r", "fc-o8"),
    dec=("r-u4-c3-o4-p1-bn4-r", "c3-o1-p1-tanh"),
    dq=("fc-o16-r", "fc-o16-r"),
    dq_heads="fc-o1-sig,fc-o1,fc-o3",
    gen=("fc-o16-r", "fc-o8"),
    lambda_cont=1.0,
    lambda_disc=1.0,
)

PRESETS = {p.name: p for p in (MNIST, CHAIR3D, CELEBA, TINY)}


def get_preset(name: str) -> ArchPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
