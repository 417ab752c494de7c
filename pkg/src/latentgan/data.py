"""MNIST IDX reading, image preprocessing and the synthetic Gaussian-mixture latents."""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IDX_MAGIC = {"labels": 0x00000801, "images": 0x00000803}


class IdxFormatError(ValueError):
    pass


@dataclass
class RawImageSet:
    """Unsigned-byte images ``(count, height, width)`` with optional labels."""

    pixels: np.ndarray
    labels: np.ndarray | None = None
    source: str = ""

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.pixels):
            raise ValueError(f"{len(self.labels)} labels for {len(self.pixels)} images")

    def __len__(self):
        return len(self.pixels)


def _open(path: Path):
    with open(path, "rb") as fh:
        head = fh.read(2)
    return gzip.open(path, "rb") if head == b"\x1f\x8b" else open(path, "rb")


def read_idx(path, kind: str) -> RawImageSet:
    """Read a big-endian IDX file (optionally gzipped).

    For ``kind="labels"`` the returned set has ``pixels`` of shape ``(count, 0, 0)``
    and the payload in ``labels``.

    Raises:
        IdxFormatError: the magic number does not match ``kind``.
        OSError: the payload is shorter than the header announces.
    """
    if kind not in IDX_MAGIC:
        raise ValueError(f"kind must be 'images' or 'labels', got {kind!r}")
    path = Path(path)
    with _open(path) as fh:
        header = fh.read(4)
        if len(header) < 4:
            raise OSError(f"{path}: truncated header, read {len(header)} of 4 bytes")
        (magic,) = struct.unpack(">I", header)
        if magic != IDX_MAGIC[kind]:
            found = {v: k for k, v in IDX_MAGIC.items()}.get(magic, "unknown")
            raise IdxFormatError(
                f"{path}: magic 0x{magic:08x} ({found}) but expected {kind} magic 0x{IDX_MAGIC[kind]:08x}"
            )
        ndim = magic & 0xFF
        dims_raw = fh.read(4 * ndim)
        if len(dims_raw) < 4 * ndim:
            raise OSError(f"{path}: truncated header, read {4 + len(dims_raw)} of {4 + 4 * ndim} bytes")
        dims = struct.unpack(f">{ndim}I", dims_raw)
        expected = int(np.prod(dims, dtype=np.int64))
        payload = fh.read(expected)
    if len(payload) < expected:
        raise OSError(f"{path}: truncated payload, read {len(payload)} of {expected} bytes")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(dims)
    if kind == "labels":
        return RawImageSet(np.zeros((dims[0], 0, 0), np.uint8), data.astype(np.int64), str(path))
    return RawImageSet(data, None, str(path))


def write_idx(path, array: np.ndarray) -> None:
    """Write an unsigned-byte array as IDX (1-D labels or 3-D images)."""
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x0800 | array.ndim
    with open(path, "wb") as fh:
        fh.write(struct.pack(f">I{array.ndim}I", magic, *array.shape))
        fh.write(array.tobytes())


def load_mnist(images_path, labels_path=None) -> RawImageSet:
    images = read_idx(images_path, "images")
    if labels_path is not None:
        images.labels = read_idx(labels_path, "labels").labels
        if len(images.labels) != len(images.pixels):
            raise ValueError(
                f"{labels_path} holds {len(images.labels)} labels for {len(images.pixels)} images"
            )
    return images


def preprocess(raw, target_size: int) -> np.ndarray:
    """Zero-pad images symmetrically to ``target_size`` and map bytes to [-1, 1].

    Accepts a :class:`RawImageSet` or a uint8 array ``(n, h, w)`` or ``(n, c, h, w)``.
    Returns float32 ``(n, c, target_size, target_size)``.
    """
    pixels = raw.pixels if isinstance(raw, RawImageSet) else np.asarray(raw)
    if pixels.ndim == 3:
        pixels = pixels[:, None]
    if pixels.ndim != 4:
        raise ValueError(f"expected (n, h, w) or (n, c, h, w) images, got shape {pixels.shape}")
    h, w = pixels.shape[-2:]
    if target_size < h or target_size < w:
        raise ValueError(f"target size {target_size} is smaller than the {h}x{w} source")
    top, left = (target_size - h) // 2, (target_size - w) // 2
    padded = np.zeros(pixels.shape[:2] + (target_size, target_size), np.float32)
    padded[:, :, top : top + h, left : left + w] = pixels
    return padded / np.float32(127.5) - np.float32(1.0)


def to_bytes(images) -> np.ndarray:
    """Map [-1, 1] images to uint8 with ``round((x + 1) * 127.5)``, halves rounded up."""
    x = np.asarray(images, dtype=np.float64)
    return np.clip(np.floor((x + 1.0) * 127.5 + 0.5), 0, 255).astype(np.uint8)


def iterate_minibatches(n: int, batch_size: int, seed: int, epoch: int):
    """Index arrays for one epoch: shuffled by ``(seed, epoch)``, last partial batch dropped."""
    order = np.random.default_rng([seed, epoch]).permutation(n)
    for start in range(0, n - batch_size + 1, batch_size):
        yield order[start : start + batch_size]


@dataclass(frozen=True)
class MixtureSpec:
    """Isotropic Gaussian mixture with shared standard deviation."""

    component_means: np.ndarray
    component_stddev: float
    weights: np.ndarray

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.component_means, dtype=np.float64))
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "component_means", means)
        object.__setattr__(self, "weights", weights)
        if self.component_stddev < 0:
            raise ValueError(f"stddev must be non-negative, got {self.component_stddev}")
        if weights.shape != (len(means),):
            raise ValueError(f"{len(weights)} weights for {len(means)} components")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be a probability vector")

    @property
    def dim(self) -> int:
        return self.component_means.shape[1]

    @classmethod
    def ring(cls, n_modes: int = 8, radius: float = 2.0, stddev: float = 0.1) -> "MixtureSpec":
        angles = 2 * np.pi * np.arange(n_modes) / n_modes
        means = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        return cls(means, stddev, np.full(n_modes, 1.0 / n_modes))


def sample_mixture(spec: MixtureSpec, n: int, seed=None, return_components: bool = False):
    """Draw ``n`` i.i.d. points: pick a component by weight, add N(0, stddev^2 I) noise."""
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    comp = rng.choice(len(spec.weights), size=n, p=spec.weights)
    x = spec.component_means[comp] + spec.component_stddev * rng.standard_normal((n, spec.dim))
    return (x, comp) if return_components else x
