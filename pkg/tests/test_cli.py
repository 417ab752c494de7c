import csv

import numpy as np
import pytest

import latentgan.training as training
from conftest import requires_mnist, MNIST_FILES
from latentgan.cli import main
from latentgan.config import ExperimentConfig, save_config
from latentgan.data import read_idx, write_idx


@pytest.fixture
def cfg_path(tiny_config, tmp_path):
    p = tmp_path / "tiny.ini"
    save_config(tiny_config, p)
    return p


@pytest.fixture
def ckpt(cfg_path, tmp_path, monkeypatch):
    monkeypatch.setenv("LATENTGAN_OUT", str(tmp_path / "out"))
    assert main(["train", str(cfg_path)]) == 0
    return tmp_path / "out" / "checkpoint.lgc"


def _csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return {r["metric"]: r["value"] for r in csv.DictReader(fh)}


def test_train_ok(ckpt, tmp_path):
    assert ckpt.exists()
    assert (tmp_path / "out" / "metrics.csv").exists()


def test_train_epochs_zero(cfg_path, tmp_path):
    assert main(["train", str(cfg_path), "--epochs", "0", "--out", str(tmp_path / "z")]) == 0
    assert (tmp_path / "z" / "checkpoint.lgc").exists()
    assert (tmp_path / "z" / "metrics.csv").read_text().count("\n") == 1


def test_train_missing_data(tiny_config, tmp_path, capsys):
    p = tmp_path / "bad.ini"
    save_config(tiny_config.with_overrides(train_images=str(tmp_path / "missing.idx")), p)
    assert main(["train", str(p)]) == 2
    assert "missing.idx" in capsys.readouterr().err


def test_train_bad_config(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[optim]\nlr = 3\n")
    assert main(["train", str(p)]) == 2
    assert "unknown key" in capsys.readouterr().err
    assert main(["train", str(tmp_path / "absent.ini")]) == 2


def test_train_failure_exit_code(cfg_path, tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(training, "reconstruction_loss", lambda x, y: ((x - y) ** 2).mean() * float("nan"))
    assert main(["train", str(cfg_path), "--out", str(tmp_path / "f")]) == 4
    assert "loss_ae" in capsys.readouterr().err


def test_eval_writes_report(ckpt, tmp_path):
    out = tmp_path / "eval.csv"
    assert main(["eval", str(ckpt), "--out", str(out)]) == 0
    rep = _csv(out)
    assert 0.0 <= float(rep["test_error"]) <= 1.0
    assert int(rep["step"]) == 8


def test_eval_corrupt_checkpoint(tmp_path, ckpt):
    bad = tmp_path / "bad.lgc"
    bad.write_bytes(ckpt.read_bytes()[:200])
    assert main(["eval", str(bad)]) == 3
    junk = tmp_path / "junk.lgc"
    junk.write_bytes(b"not a zip")
    assert main(["sample", str(junk)]) == 3


def test_eval_missing_labels(ckpt, tmp_path, capsys):
    assert main(["eval", str(ckpt), "--test-labels", str(tmp_path / "nolabels.idx")]) == 2
    assert "nolabels.idx" in capsys.readouterr().err
    assert main(["eval", str(tmp_path / "nockpt.lgc")]) == 2


def test_sample_deterministic(ckpt, tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    assert main(["sample", str(ckpt), "--n", "9", "--seed", "3", "--out", str(a)]) == 0
    assert main(["sample", str(ckpt), "--n", "9", "--seed", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_traverse(ckpt, tmp_path):
    from PIL import Image

    out = tmp_path / "t.png"
    assert main(["traverse", str(ckpt), "--vary", "cat0", "--rows", "2", "--out", str(out)]) == 0
    with Image.open(out) as im:
        assert im.size == (3 * 4, 2 * 4)
    out2 = tmp_path / "u.png"
    assert main(["traverse", str(ckpt), "--vary", "u1", "--range", "-1.5", "1.5", "--cols", "5", "--out", str(out2)]) == 0
    with Image.open(out2) as im:
        assert im.size == (5 * 4, 10 * 4)


def test_traverse_bad_code(ckpt, capsys):
    assert main(["traverse", str(ckpt), "--vary", "u9"]) == 2
    assert "available" in capsys.readouterr().err
    assert main(["traverse", str(ckpt), "--vary", "cat0", "--cols", "5"]) == 2


def test_env_out_default(ckpt, tmp_path):
    assert main(["sample", str(ckpt), "--n", "4"]) == 0
    assert (tmp_path / "out" / "samples.png").exists()


def test_oracle_cli(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["oracle", "--steps", "50", "--out", str(out), "--scatter", str(tmp_path / "s.png")]) == 0
    rep = _csv(out)
    assert {"mmd2", "purity", "baseline", "purity_sigma"} <= set(rep)
    assert (tmp_path / "s.png").exists()


def test_oracle_bad_k():
    assert main(["oracle", "--k", "9"]) == 2
    assert main(["oracle", "--k", "1"]) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 2


@requires_mnist
def test_eval_untrained_mnist_near_chance(tmp_path, monkeypatch):
    r = np.random.default_rng(0)
    paths = {}
    for split, n in (("train", 3000), ("test", 3000)):
        imgs = read_idx(MNIST_FILES[f"{split}_images"], "images").pixels
        labels = read_idx(MNIST_FILES[f"{split}_labels"], "labels").labels
        idx = r.choice(len(labels), n, replace=False)
        paths[f"{split}_images"] = tmp_path / f"{split}-img.idx"
        paths[f"{split}_labels"] = tmp_path / f"{split}-lab.idx"
        write_idx(paths[f"{split}_images"], imgs[idx])
        write_idx(paths[f"{split}_labels"], labels[idx])
    cfg = ExperimentConfig(preset="mnist", **{k: str(v) for k, v in paths.items()}, output_dir=str(tmp_path / "m"))
    save_config(cfg, tmp_path / "m.ini")
    monkeypatch.delenv("LATENTGAN_OUT", raising=False)
    assert main(["train", str(tmp_path / "m.ini"), "--epochs", "0"]) == 0
    assert main(["eval", str(tmp_path / "m" / "checkpoint.lgc")]) == 0
    err = float(_csv(tmp_path / "m" / "eval.csv")["test_error"])
    assert 0.8 <= err <= 0.95
