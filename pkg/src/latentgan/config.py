"""Experiment configuration and its INI-style text format."""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .codes import CodeSpec
from .losses import LossWeights, NoisyLabelPolicy
from .presets import get_preset

FORMAT_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OptimSettings:
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.9
    batch_size: int = 128
    epochs: int = 30

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        for b in (self.beta1, self.beta2):
            if not 0 <= b < 1:
                raise ConfigError(f"Adam betas must lie in [0, 1), got {b}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigError("batch_size must be >= 1 and epochs >= 0")


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "mnist"
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    codes: CodeSpec | None = None
    loss: LossWeights | None = None
    noisy_labels: NoisyLabelPolicy = field(default_factory=NoisyLabelPolicy)
    optim: OptimSettings = field(default_factory=OptimSettings)
    seed: int = 0
    checkpoint_interval: int = 1000
    output_dir: str = "runs/latentgan"
    assignment: str = "hungarian"

    def __post_init__(self):
        preset = get_preset(self.preset)
        if self.codes is None:
            object.__setattr__(self, "codes", preset.code_spec)
        if self.loss is None:
            object.__setattr__(self, "loss", LossWeights(preset.lambda_cont, preset.lambda_disc))
        ref = preset.code_spec
        if (self.codes.noise_dim, self.codes.categoricals, self.codes.n_continuous) != (
            ref.noise_dim,
            ref.categoricals,
            ref.n_continuous,
        ):
            raise ConfigError(
                f"code layout (noise {self.codes.noise_dim}, categoricals {list(self.codes.categoricals)}, "
                f"{self.codes.n_continuous} continuous) does not fit preset {self.preset!r}"
            )
        if self.checkpoint_interval < 1:
            raise ConfigError("checkpoint_interval must be >= 1")
        if self.assignment not in ("hungarian", "majority"):
            raise ConfigError(f"assignment must be 'hungarian' or 'majority', got {self.assignment!r}")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        optim_keys = {f.name for f in fields(OptimSettings)}
        optim = {k: kw.pop(k) for k in list(kw) if k in optim_keys}
        cfg = replace(self, **kw)
        if optim:
            cfg = replace(cfg, optim=replace(cfg.optim, **optim))
        return cfg


def _interval(text):
    lo, hi = text.split(":")
    return float(lo), float(hi)


def _fmt_interval(iv):
    return f"{iv[0]!r}:{iv[1]!r}"


def _bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_SCHEMA = {
    "experiment": {"format_version", "preset", "seed", "checkpoint_interval", "output_dir", "assignment"},
    "data": {"train_images", "train_labels", "test_images", "test_labels"},
    "codes": {"noise_dim", "categoricals", "continuous", "traversal_range"},
    "loss": {"lambda_cont", "lambda_disc"},
    "noisy_labels": {"enabled", "real_interval", "fake_interval"},
    "optim": {"learning_rate", "beta1", "beta2", "batch_size", "epochs"},
}


def dumps(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp["experiment"] = {
        "format_version": str(FORMAT_VERSION),
        "preset": cfg.preset,
        "seed": str(cfg.seed),
        "checkpoint_interval": str(cfg.checkpoint_interval),
        "output_dir": cfg.output_dir,
        "assignment": cfg.assignment,
    }
    cp["data"] = {
        k: getattr(cfg, k) for k in ("train_images", "train_labels", "test_images", "test_labels")
        if getattr(cfg, k) is not None
    }
    c = cfg.codes
    cp["codes"] = {
        "noise_dim": str(c.noise_dim),
        "categoricals": ", ".join(map(str, c.categoricals)),
        "continuous": ", ".join(_fmt_interval(iv) for iv in c.continuous),
        "traversal_range": _fmt_interval(c.traversal_range),
    }
    cp["loss"] = {"lambda_cont": repr(cfg.loss.lambda_cont), "lambda_disc": repr(cfg.loss.lambda_disc)}
    n = cfg.noisy_labels
    cp["noisy_labels"] = {
        "enabled": str(n.enabled).lower(),
        "real_interval": _fmt_interval(n.real_interval),
        "fake_interval": _fmt_interval(n.fake_interval),
    }
    o = cfg.optim
    cp["optim"] = {
        "learning_rate": repr(o.learning_rate),
        "beta1": repr(o.beta1),
        "beta2": repr(o.beta2),
        "batch_size": str(o.batch_size),
        "epochs": str(o.epochs),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def loads(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(cp[section]) - _SCHEMA[section]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    get = lambda s, k, default=None: cp.get(s, k, fallback=default)  # noqa: E731
    version = int(get("experiment", "format_version", str(FORMAT_VERSION)))
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported config format_version {version}")
    try:
        preset_name = get("experiment", "preset", "mnist")
        preset = get_preset(preset_name)
        codes = None
        if cp.has_section("codes"):
            ref = preset.code_spec
            cats = get("codes", "categoricals")
            conts = get("codes", "continuous")
            trav = get("codes", "traversal_range")
            codes = CodeSpec(
                noise_dim=int(get("codes", "noise_dim", str(ref.noise_dim))),
                categoricals=ref.categoricals if cats is None else tuple(
                    int(v) for v in cats.split(",") if v.strip()
                ),
                continuous=ref.continuous if conts is None else tuple(
                    _interval(v) for v in conts.split(",") if v.strip()
                ),
                traversal_range=ref.traversal_range if trav is None else _interval(trav),
            )
        loss = None
        if cp.has_section("loss"):
            loss = LossWeights(
                float(get("loss", "lambda_cont", str(preset.lambda_cont))),
                float(get("loss", "lambda_disc", str(preset.lambda_disc))),
            )
        dn = NoisyLabelPolicy()
        noisy = NoisyLabelPolicy(
            real_interval=_interval(get("noisy_labels", "real_interval", _fmt_interval(dn.real_interval))),
            fake_interval=_interval(get("noisy_labels", "fake_interval", _fmt_interval(dn.fake_interval))),
            enabled=_bool(get("noisy_labels", "enabled", "true")),
        )
        do = OptimSettings()
        optim = OptimSettings(
            learning_rate=float(get("optim", "learning_rate", repr(do.learning_rate))),
            beta1=float(get("optim", "beta1", repr(do.beta1))),
            beta2=float(get("optim", "beta2", repr(do.beta2))),
            batch_size=int(get("optim", "batch_size", str(do.batch_size))),
            epochs=int(get("optim", "epochs", str(do.epochs))),
        )
        return ExperimentConfig(
            preset=preset_name,
            train_images=get("data", "train_images"),
            train_labels=get("data", "train_labels"),
            test_images=get("data", "test_images"),
            test_labels=get("data", "test_labels"),
            codes=codes,
            loss=loss,
            noisy_labels=noisy,
            optim=optim,
            seed=int(get("experiment", "seed", "0")),
            checkpoint_interval=int(get("experiment", "checkpoint_interval", "1000")),
            output_dir=get("experiment", "output_dir", "runs/latentgan"),
            assignment=get("experiment", "assignment", "hungarian"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    return loads(Path(path).read_text(encoding="utf-8"))


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(dumps(cfg), encoding="utf-8")
