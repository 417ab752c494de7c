import pytest

from latentgan.codes import CodeSpec
from latentgan.config import ConfigError, ExperimentConfig, OptimSettings, dumps, load_config, loads, save_config
from latentgan.losses import LossWeights, NoisyLabelPolicy


def test_defaults_follow_preset():
    cfg = ExperimentConfig()
    assert cfg.loss == LossWeights(1.0, 0.1)
    assert cfg.codes.input_dim == 76
    assert (cfg.optim.learning_rate, cfg.optim.beta1, cfg.optim.beta2, cfg.optim.batch_size) == (2e-4, 0.5, 0.9, 128)
    assert ExperimentConfig(preset="chair3d").loss == LossWeights(1.0, 10.0)
    assert ExperimentConfig(preset="celeba").loss == LossWeights(1.0, 1.0)


def test_roundtrip_exact(tmp_path):
    cfg = ExperimentConfig(
        preset="tiny",
        train_images="/data/x.idx",
        loss=LossWeights(0.1 + 0.2, 1 / 3),
        noisy_labels=NoisyLabelPolicy((0.7, 0.95), (0.05, 0.3), enabled=False),
        optim=OptimSettings(1.7e-4, 0.4, 0.99, 32, 3),
        codes=CodeSpec(4, (3,), ((-2.0, 0.5),), traversal_range=(-3.0, 3.0)),
        seed=12,
        checkpoint_interval=7,
        output_dir="out/here",
        assignment="majority",
    )
    assert loads(dumps(cfg)) == cfg
    save_config(cfg, tmp_path / "c.ini")
    assert load_config(tmp_path / "c.ini") == cfg
    assert dumps(loads(dumps(cfg))) == dumps(cfg)


def test_missing_sections_take_defaults():
    assert loads("[experiment]\npreset = mnist\n") == ExperimentConfig()


@pytest.mark.parametrize(
    "text,match",
    [
        ("[experiment]\nbogus = 1\n", "unknown key"),
        ("[extra]\na = 1\n", "unknown section"),
        ("[experiment]\nformat_version = 9\n", "format_version"),
        ("[experiment]\npreset = nope\n", "nope"),
        ("[optim]\nlearning_rate = -1\n", "learning_rate"),
        ("[optim]\nbeta1 = 1.0\n", "betas"),
        ("[loss]\nlambda_disc = -0.1\n", "lambda_disc"),
        ("[codes]\ncategoricals = 10, 10\n", "does not fit"),
        ("[noisy_labels]\nreal_interval = 0.1:0.3\n", "overlap"),
        ("[noisy_labels]\nreal_interval = 0.9:0.8\n", "real_interval"),
        ("[noisy_labels]\nenabled = maybe\n", "boolean"),
        ("not ini", "malformed"),
    ],
)
def test_invalid(text, match):
    with pytest.raises(ConfigError, match=match):
        loads(text)


def test_with_overrides_routes_optim_keys():
    cfg = ExperimentConfig().with_overrides(epochs=3, learning_rate=1e-3, seed=5)
    assert cfg.optim.epochs == 3 and cfg.optim.learning_rate == 1e-3 and cfg.seed == 5
