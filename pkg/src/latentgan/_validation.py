"""Input checks shared by the estimator and the CLI."""
from __future__ import annotations

import numpy as np

from .data import RawImageSet, preprocess
from .presets import ArchPreset


def check_images(X, preset: ArchPreset) -> np.ndarray:
    """Return float32 images shaped for ``preset``.

    Accepts raw bytes (``uint8``, ``(n, h, w)`` or ``(n, c, h, w)``, padded to the
    preset size) or already-preprocessed floats in [-1, 1] of the exact shape.
    """
    if isinstance(X, RawImageSet):
        X = X.pixels
    X = np.asarray(X)
    c, h, w = preset.image_shape
    if X.dtype == np.uint8:
        if X.ndim == 3 and c != 1:
            raise ValueError(f"preset {preset.name!r} expects {c} channels; got single-channel images")
        X = preprocess(X, h)
    else:
        X = np.asarray(X, dtype=np.float32)
        if X.ndim == 3 and c == 1:
            X = X[:, None]
        if X.size and (not np.isfinite(X).all() or X.min() < -1.0 or X.max() > 1.0):
            raise ValueError("float images must be finite and lie in [-1, 1]; pass uint8 for raw pixels")
    if X.ndim != 4 or X.shape[1:] != (c, h, w):
        raise ValueError(f"images of shape {X.shape} do not fit preset {preset.name!r} ({c}x{h}x{w})")
    if len(X) == 0:
        raise ValueError("got an empty image array")
    return X


def check_latents(Z, latent_dim: int) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float32)
    if Z.ndim != 2 or Z.shape[1] != latent_dim:
        raise ValueError(f"latents of shape {Z.shape}, expected (n, {latent_dim})")
    if not np.isfinite(Z).all():
        raise ValueError("latents contain NaN or inf")
    return Z
