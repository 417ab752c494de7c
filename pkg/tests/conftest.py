import os
from pathlib import Path

import numpy as np
import pytest
import torch

torch.set_num_threads(1)

MNIST_DIR = Path(os.environ.get("LATENTGAN_MNIST_DIR", "/root/data/mnist"))
MNIST_FILES = {
    "train_images": MNIST_DIR / "train-images-idx3-ubyte",
    "train_labels": MNIST_DIR / "train-labels-idx1-ubyte",
    "test_images": MNIST_DIR / "t10k-images-idx3-ubyte",
    "test_labels": MNIST_DIR / "t10k-labels-idx1-ubyte",
}


def mnist_available():
    return all(p.exists() for p in MNIST_FILES.values())


requires_mnist = pytest.mark.skipif(not mnist_available(), reason=f"MNIST IDX files not found in {MNIST_DIR}")


@pytest.fixture
def mnist_files():
    if not mnist_available():
        pytest.skip(f"MNIST IDX files not found in {MNIST_DIR}")
    return MNIST_FILES


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_images(rng):
    return rng.integers(0, 256, size=(64, 4, 4), dtype=np.uint8)


@pytest.fixture
def tiny_config(tmp_path, rng):
    """Config for the tiny preset over 64 random 4x4 IDX images with labels in [0, 3)."""
    from latentgan.config import ExperimentConfig, OptimSettings
    from latentgan.data import write_idx

    imgs, labels = tmp_path / "imgs.idx", tmp_path / "labels.idx"
    write_idx(imgs, rng.integers(0, 256, size=(64, 4, 4), dtype=np.uint8))
    write_idx(labels, rng.integers(0, 3, size=64, dtype=np.uint8))
    return ExperimentConfig(
        preset="tiny",
        train_images=str(imgs),
        train_labels=str(labels),
        test_images=str(imgs),
        test_labels=str(labels),
        optim=OptimSettings(learning_rate=1e-3, batch_size=16, epochs=2),
        seed=7,
        checkpoint_interval=4,
        output_dir=str(tmp_path / "run"),
    )


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(capsys):
    """Record one acceptance line; ``criterion(name, ok, detail)`` also prints it."""

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print(f"\n[acceptance] {line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
