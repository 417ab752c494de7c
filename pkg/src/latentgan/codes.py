"""Latent-code layout, sampling and traversal grids for the generator input.

The generator input is the concatenation ``[noise | cat_0 | ... | cat_k | u_1 ... u_m]``:
standard-normal noise first, then one one-hot block per categorical code in
declared order, then one scalar per continuous code in declared order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CodeSpec:
    """Declarative layout of the generator input.

    Attributes:
        noise_dim: Width of the Gaussian noise segment.
        categoricals: Category count of each categorical code.
        continuous: ``(low, high)`` sampling interval of each continuous code.
        traversal_range: Interval swept by continuous traversals. May extend
            beyond the training intervals.
    """

    noise_dim: int
    categoricals: tuple[int, ...] = ()
    continuous: tuple[tuple[float, float], ...] = ()
    traversal_range: tuple[float, float] = (-1.5, 1.5)

    def __post_init__(self):
        object.__setattr__(self, "categoricals", tuple(int(k) for k in self.categoricals))
        object.__setattr__(
            self, "continuous", tuple((float(lo), float(hi)) for lo, hi in self.continuous)
        )
        object.__setattr__(self, "traversal_range", tuple(float(v) for v in self.traversal_range))
        if self.noise_dim <= 0:
            raise ValueError(f"noise_dim must be positive, got {self.noise_dim}")
        for i, k in enumerate(self.categoricals):
            if k < 2:
                raise ValueError(f"categorical code cat{i} needs at least 2 classes, got {k}")
        for i, (lo, hi) in enumerate(self.continuous):
            if not lo < hi:
                raise ValueError(f"continuous code u{i + 1} has empty interval ({lo}, {hi})")
        lo, hi = self.traversal_range
        if not lo < hi:
            raise ValueError(f"traversal_range ({lo}, {hi}) is empty")

    @property
    def n_continuous(self) -> int:
        return len(self.continuous)

    @property
    def input_dim(self) -> int:
        return self.noise_dim + sum(self.categoricals) + self.n_continuous

    def code_names(self) -> list[str]:
        """Selectable code names: ``cat0, cat1, ...`` then ``u1, u2, ...``."""
        return [f"cat{i}" for i in range(len(self.categoricals))] + [
            f"u{i + 1}" for i in range(self.n_continuous)
        ]

    def segments(self) -> dict[str, slice]:
        """Column slice of every segment of the assembled input, in order."""
        out = {"noise": slice(0, self.noise_dim)}
        start = self.noise_dim
        for i, k in enumerate(self.categoricals):
            out[f"cat{i}"] = slice(start, start + k)
            start += k
        for i in range(self.n_continuous):
            out[f"u{i + 1}"] = slice(start, start + 1)
            start += 1
        return out


@dataclass
class LatentCode:
    """A batch of sampled generator inputs, kept segment by segment.

    ``noise`` is ``(n, noise_dim)``, each entry of ``cat_onehots`` is ``(n, K_i)``
    and ``cont_values`` is ``(n, n_continuous)``.
    """

    noise: np.ndarray
    cat_onehots: list[np.ndarray] = field(default_factory=list)
    cont_values: np.ndarray | None = None

    def __len__(self):
        return self.noise.shape[0]

    def cat_indices(self) -> list[np.ndarray]:
        return [oh.argmax(axis=1) for oh in self.cat_onehots]


def sample_code(spec: CodeSpec, seed=None, n: int = 1) -> LatentCode:
    """Draw ``n`` independent codes: N(0, I) noise, uniform classes, uniform scalars.

    ``seed`` may be an int or a ``numpy.random.Generator`` (advanced in place).
    """
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n, spec.noise_dim))
    onehots = []
    for k in spec.categoricals:
        idx = rng.integers(0, k, size=n)
        onehots.append(np.eye(k)[idx])
    cont = np.empty((n, spec.n_continuous))
    for j, (lo, hi) in enumerate(spec.continuous):
        cont[:, j] = rng.uniform(lo, hi, size=n)
    return LatentCode(noise=noise, cat_onehots=onehots, cont_values=cont)


def assemble(code: LatentCode, spec: CodeSpec) -> np.ndarray:
    """Concatenate a code batch into generator inputs of shape ``(n, input_dim)``."""
    n = code.noise.shape[0] if code.noise.ndim == 2 else -1
    if code.noise.ndim != 2 or code.noise.shape[1] != spec.noise_dim:
        raise ValueError(f"segment 'noise' has shape {code.noise.shape}, expected (n, {spec.noise_dim})")
    if len(code.cat_onehots) != len(spec.categoricals):
        raise ValueError(
            f"got {len(code.cat_onehots)} categorical segments, spec declares {len(spec.categoricals)}"
        )
    parts = [code.noise]
    for i, (oh, k) in enumerate(zip(code.cat_onehots, spec.categoricals)):
        if oh.shape != (n, k):
            raise ValueError(f"segment 'cat{i}' has shape {oh.shape}, expected ({n}, {k})")
        parts.append(oh)
    cont = code.cont_values
    if cont is None:
        cont = np.empty((n, 0))
    if cont.shape != (n, spec.n_continuous):
        raise ValueError(
            f"continuous segment has shape {cont.shape}, expected ({n}, {spec.n_continuous})"
        )
    parts.append(cont)
    return np.concatenate(parts, axis=1).astype(np.float64)


def split_input(inputs: np.ndarray, spec: CodeSpec) -> LatentCode:
    """Inverse of :func:`assemble`."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != spec.input_dim:
        raise ValueError(f"inputs have shape {inputs.shape}, expected (n, {spec.input_dim})")
    seg = spec.segments()
    onehots = [inputs[:, seg[f"cat{i}"]] for i in range(len(spec.categoricals))]
    cont = inputs[:, spec.input_dim - spec.n_continuous :]
    return LatentCode(noise=inputs[:, seg["noise"]], cat_onehots=onehots, cont_values=cont)


def traversal_grid(
    spec: CodeSpec,
    vary: str,
    rows: int,
    cols: int,
    seed=None,
    value_range: tuple[float, float] | None = None,
) -> np.ndarray:
    """Generator inputs for a ``rows x cols`` traversal, row-major.

    Every row starts from one independent :func:`sample_code` draw. Across the
    columns of a row only the ``vary`` segment changes: a categorical code
    enumerates its classes (``cols`` must equal K), a continuous code is swept
    linearly over ``value_range`` (default ``spec.traversal_range``). With
    ``cols == 1`` nothing is varied and the sampled codes are returned as-is.

    Returns:
        Array of shape ``(rows * cols, spec.input_dim)``.
    """
    names = spec.code_names()
    if vary not in names:
        raise ValueError(f"unknown code {vary!r}; available: {', '.join(names) or 'none'}")
    if rows < 1 or cols < 1:
        raise ValueError(f"rows and cols must be positive, got {rows}x{cols}")
    base = assemble(sample_code(spec, seed, n=rows), spec)
    grid = np.repeat(base, cols, axis=0)
    if cols == 1:
        return grid
    sl = spec.segments()[vary]
    if vary.startswith("cat"):
        k = spec.categoricals[int(vary[3:])]
        if cols != k:
            raise ValueError(f"{vary} has {k} classes; a categorical traversal needs cols={k}, got {cols}")
        grid[:, sl] = np.tile(np.eye(k), (rows, 1))
    else:
        lo, hi = spec.traversal_range if value_range is None else value_range
        grid[:, sl] = np.tile(np.linspace(lo, hi, cols), rows)[:, None]
    return grid
