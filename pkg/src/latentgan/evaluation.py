"""Unsupervised classification error, image grids and the MMD statistic."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from scipy.optimize import linear_sum_assignment

from .codes import assemble, sample_code, traversal_grid
from .data import to_bytes
from .networks import NetworkBundle, decode, discriminate, encode, generate


class UnsupportedError(ValueError):
    pass


# ----------------------------------------------------------------------------
# unsupervised classification


def _bundle(obj) -> NetworkBundle:
    return obj if isinstance(obj, NetworkBundle) else obj.bundle


@torch.no_grad()
def predict_logits(bundle, latents, batch_size: int = 1000) -> np.ndarray:
    bundle = _bundle(bundle)
    if not bundle.preset.code_spec.categoricals:
        raise UnsupportedError(f"preset {bundle.preset.name!r} has no categorical code head")
    bundle.eval()
    latents = torch.as_tensor(np.asarray(latents), dtype=bundle.dtype) if not torch.is_tensor(latents) else latents
    out = [discriminate(bundle, latents[i : i + batch_size])[1].cat_logits[0] for i in range(0, len(latents), batch_size)]
    return torch.cat(out).cpu().numpy() if out else np.empty((0, bundle.preset.code_spec.categoricals[0]))


def classify_latents(bundle, latents) -> np.ndarray:
    """Cluster index per latent: argmax of the first categorical Q head (ties -> lowest index)."""
    return np.argmax(predict_logits(bundle, latents), axis=1)


@torch.no_grad()
def encode_images(bundle, images, batch_size: int = 1000) -> torch.Tensor:
    bundle = _bundle(bundle)
    bundle.eval()
    parts = [encode(bundle, images[i : i + batch_size]) for i in range(0, len(images), batch_size)]
    return torch.cat(parts)


def classify_images(bundle, images) -> np.ndarray:
    return classify_latents(bundle, encode_images(bundle, images))


@dataclass
class ClusterAssignment:
    """Mapping from cluster index to label, fit on a training split."""

    mapping: np.ndarray
    train_confusion: np.ndarray
    method: str

    @property
    def train_accuracy(self) -> float:
        c = self.train_confusion
        return float(c[np.arange(len(self.mapping)), self.mapping].sum() / c.sum())

    def apply(self, clusters) -> np.ndarray:
        return self.mapping[np.asarray(clusters)]


def confusion(clusters, labels, k: int) -> np.ndarray:
    """``k x k`` counts, rows = cluster, columns = label."""
    out = np.zeros((k, k), dtype=np.int64)
    np.add.at(out, (np.asarray(clusters), np.asarray(labels)), 1)
    return out


def fit_assignment(clusters, labels, k: int, method: str = "hungarian") -> ClusterAssignment:
    """Map clusters to labels by optimal bijection (hungarian) or per-cluster vote (majority)."""
    clusters, labels = np.asarray(clusters), np.asarray(labels)
    if len(clusters) == 0:
        raise ValueError("cannot fit an assignment on empty input")
    if len(clusters) != len(labels):
        raise ValueError(f"{len(clusters)} clusters vs {len(labels)} labels")
    if labels.min() < 0 or labels.max() >= k or clusters.min() < 0 or clusters.max() >= k:
        raise ValueError(f"clusters and labels must lie in [0, {k})")
    conf = confusion(clusters, labels, k)
    if method == "hungarian":
        rows, cols = linear_sum_assignment(conf, maximize=True)
        mapping = np.empty(k, dtype=np.int64)
        mapping[rows] = cols
    elif method == "majority":
        mapping = conf.argmax(axis=1)
    else:
        raise ValueError(f"unknown assignment method {method!r}")
    return ClusterAssignment(mapping, conf, method)


def error_rate(predicted_labels, labels) -> float:
    return float(np.mean(np.asarray(predicted_labels) != np.asarray(labels)))


def test_error(state, test_images, test_labels, assignment: ClusterAssignment) -> float:
    """Fraction of test images whose mapped cluster differs from the true label."""
    return error_rate(assignment.apply(classify_images(state, test_images)), test_labels)


def evaluate_classification(state, train_images, train_labels, test_images, test_labels, method="hungarian"):
    """Fit the cluster mapping on the training split, report test error."""
    k = _bundle(state).preset.code_spec.categoricals[0]
    assignment = fit_assignment(classify_images(state, train_images), train_labels, k, method)
    return test_error(state, test_images, test_labels, assignment), assignment


# ----------------------------------------------------------------------------
# image grids


def grid_image(images, rows: int, cols: int) -> Image.Image:
    """Tile ``(n, c, h, w)`` images in [-1, 1] row-major into one 8-bit image."""
    arr = to_bytes(images)
    n, c, h, w = arr.shape
    canvas = np.zeros((rows * h, cols * w, c), np.uint8)
    for i in range(n):
        r, q = divmod(i, cols)
        canvas[r * h : (r + 1) * h, q * w : (q + 1) * w] = arr[i].transpose(1, 2, 0)
    return Image.fromarray(canvas[:, :, 0] if c == 1 else canvas, mode="L" if c == 1 else "RGB")


@torch.no_grad()
def render_inputs(state, inputs) -> np.ndarray:
    """Dec(G(inputs)) in inference mode."""
    bundle = _bundle(state)
    bundle.eval()
    return decode(bundle, generate(bundle, inputs)).cpu().numpy()


def emit_samples(state, n: int, seed, path) -> np.ndarray:
    """Write a near-square grid of ``n`` random samples as PNG; returns the images."""
    spec = _bundle(state).preset.code_spec if not hasattr(state, "config") else state.config.codes
    images = render_inputs(state, assemble(sample_code(spec, seed, n=n), spec))
    cols = math.ceil(math.sqrt(n))
    _save(grid_image(images, math.ceil(n / cols), cols), path)
    return images


def emit_traversal(state, vary: str, rows: int, cols: int, seed, path, value_range=None) -> np.ndarray:
    """Write a traversal grid: one row per sampled code, ``vary`` swept across columns."""
    spec = _bundle(state).preset.code_spec if not hasattr(state, "config") else state.config.codes
    inputs = traversal_grid(spec, vary, rows, cols, seed, value_range)
    images = render_inputs(state, inputs)
    _save(grid_image(images, rows, cols), path)
    return images


def _save(img: Image.Image, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    img.save(path, format="PNG")


# ----------------------------------------------------------------------------
# maximum mean discrepancy


@dataclass
class Mmd2Result:
    value: float
    kernel_bandwidth: float
    n_x: int
    n_y: int


def median_bandwidth(x, max_points: int = 2000) -> float:
    """Median pairwise Euclidean distance (first ``max_points`` rows)."""
    x = np.asarray(x, dtype=np.float64)[:max_points]
    d = np.sqrt(np.maximum(_sqdist(x, x), 0.0))
    iu = np.triu_indices(len(x), k=1)
    med = float(np.median(d[iu])) if len(iu[0]) else 1.0
    return med if med > 0 else 1.0


def _sqdist(a, b):
    return (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T


def _kernel_sum(a, b, sigma, chunk=2048):
    total = 0.0
    for i in range(0, len(a), chunk):
        d = np.maximum(_sqdist(a[i : i + chunk], b), 0.0)
        total += np.exp(-d / (2.0 * sigma * sigma)).sum()
    return total


def mmd2(x, y, bandwidth: float | None = None) -> Mmd2Result:
    """Biased (V-statistic) squared MMD with a Gaussian kernel.

    ``bandwidth`` defaults to the median pairwise distance within ``x``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if len(x) == 0 or len(y) == 0:
        raise ValueError("mmd2 needs non-empty samples")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    sigma = median_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not sigma > 0:
        raise ValueError(f"bandwidth must be positive, got {sigma}")
    m, n = len(x), len(y)
    value = (
        _kernel_sum(x, x, sigma) / (m * m)
        + _kernel_sum(y, y, sigma) / (n * n)
        - 2.0 * _kernel_sum(x, y, sigma) / (m * n)
    )
    return Mmd2Result(max(value, 0.0), sigma, m, n)
