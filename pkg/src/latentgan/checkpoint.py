"""Checkpoint archive: a zip file readable without this package.

Layout::

    format_version          ASCII integer
    config.ini              experiment config (see latentgan.config)
    state.json              step, RNG state, tensor index, Adam step counts
    tensors/<name>.bin      network tensors
    adam/<group>/<name>.m.bin, .v.bin   Adam moments

Every ``.bin`` blob is: uint32 ndim, ndim x uint32 dims, then float32 values,
all little-endian, C order.
"""
from __future__ import annotations

import json
import struct
import zipfile
from pathlib import Path

import numpy as np
import torch

from . import config as config_io
from .training import TrainState, init_state

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """The archive is missing entries or holds malformed data."""


def encode_blob(tensor) -> bytes:
    arr = np.ascontiguousarray(tensor.detach().cpu().numpy() if torch.is_tensor(tensor) else tensor)
    head = struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape)
    return head + arr.astype("<f4").tobytes()


def decode_blob(data: bytes, name: str = "") -> np.ndarray:
    try:
        (ndim,) = struct.unpack_from("<I", data, 0)
        shape = struct.unpack_from(f"<{ndim}I", data, 4)
    except struct.error:
        raise CheckpointError(f"blob {name}: truncated shape header") from None
    offset = 4 + 4 * ndim
    count = int(np.prod(shape, dtype=np.int64))
    if len(data) - offset != 4 * count:
        raise CheckpointError(f"blob {name}: {len(data) - offset} payload bytes for shape {shape}")
    return np.frombuffer(data, dtype="<f4", offset=offset).reshape(shape).copy()


def save_checkpoint(state: TrainState, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tensors = state.bundle.named_tensors()
    meta = {
        "format_version": FORMAT_VERSION,
        "preset": state.bundle.preset.name,
        "step": state.step,
        "rng": state.rng.bit_generator.state,
        "tensors": [{"name": k, "shape": list(t.shape)} for k, t in tensors.items()],
        "adam_steps": {g: opt.t for g, opt in state.optimizers.items()},
    }
    tmp = path.with_name(path.name + ".tmp")
    with zipfile.ZipFile(tmp, "w", compression=zipfile.ZIP_STORED) as zf:
        _write(zf, "format_version", f"{FORMAT_VERSION}\n".encode())
        _write(zf, "config.ini", config_io.dumps(state.config).encode("utf-8"))
        _write(zf, "state.json", json.dumps(meta, indent=1).encode("utf-8"))
        for name, t in tensors.items():
            _write(zf, f"tensors/{name}.bin", encode_blob(t))
        for group, opt in state.optimizers.items():
            for name in opt.params:
                _write(zf, f"adam/{group}/{name}.m.bin", encode_blob(opt.m[name]))
                _write(zf, f"adam/{group}/{name}.v.bin", encode_blob(opt.v[name]))
    tmp.replace(path)


def _write(zf, name, data):
    # fixed timestamp keeps archives byte-identical across runs
    info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
    zf.writestr(info, data)


def load_checkpoint(path, dtype=torch.float32) -> TrainState:
    """Rebuild the full training state from an archive.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        CheckpointError: the archive is corrupt or incompatible.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        zf = zipfile.ZipFile(path)
    except (zipfile.BadZipFile, OSError) as exc:
        raise CheckpointError(f"{path}: not a checkpoint archive ({exc})") from None
    with zf:
        try:
            version = int(zf.read("format_version").decode().strip())
            if version != FORMAT_VERSION:
                raise CheckpointError(f"{path}: unsupported format_version {version}")
            cfg = config_io.loads(zf.read("config.ini").decode("utf-8"))
            meta = json.loads(zf.read("state.json"))
            state = init_state(cfg, dtype=dtype)
            tensors = state.bundle.named_tensors()
            if [t["name"] for t in meta["tensors"]] != list(tensors):
                raise CheckpointError(f"{path}: tensor index does not match preset {cfg.preset!r}")
            with torch.no_grad():
                for name, t in tensors.items():
                    t.copy_(_load(zf, f"tensors/{name}.bin", t))
                for group, opt in state.optimizers.items():
                    for name in opt.params:
                        opt.m[name].copy_(_load(zf, f"adam/{group}/{name}.m.bin", opt.m[name]))
                        opt.v[name].copy_(_load(zf, f"adam/{group}/{name}.v.bin", opt.v[name]))
                    opt.t = {k: int(v) for k, v in meta["adam_steps"][group].items()}
            state.rng.bit_generator.state = meta["rng"]
            state.step = int(meta["step"])
        except CheckpointError:
            raise
        except (KeyError, ValueError, TypeError, zipfile.BadZipFile) as exc:
            raise CheckpointError(f"{path}: corrupt checkpoint ({exc})") from None
    return state


def _load(zf, entry, like):
    arr = decode_blob(zf.read(entry), entry)
    if tuple(arr.shape) != tuple(like.shape):
        raise CheckpointError(f"{entry}: shape {arr.shape}, expected {tuple(like.shape)}")
    return torch.from_numpy(arr).to(like.dtype)

