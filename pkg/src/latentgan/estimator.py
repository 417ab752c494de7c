"""scikit-learn style wrapper around the training loop."""
from __future__ import annotations

import numpy as np
import torch
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_images, check_latents
from .codes import assemble, sample_code
from .config import ExperimentConfig, OptimSettings
from .evaluation import classify_latents, encode_images, render_inputs
from .losses import LossWeights, NoisyLabelPolicy
from .networks import decode
from .presets import get_preset
from .training import init_state, run_epochs


class LatentGANAutoencoder(TransformerMixin, ClusterMixin, BaseEstimator):
    """Autoencoder whose latent distribution is learned by an InfoGAN-style latent GAN.

    ``fit`` trains the autoencoder, the latent generator and the shared D/Q
    network jointly. ``transform`` gives encoder latents, ``inverse_transform``
    decodes them, ``predict`` returns the Q network's category for each image
    (the unsupervised cluster), and ``sample`` draws new images through
    ``Dec(G(noise, codes))``.

    ``lambda_cont`` / ``lambda_disc`` default to the preset's values.
    """

    def __init__(
        self,
        preset="mnist",
        epochs=30,
        batch_size=128,
        learning_rate=2e-4,
        beta1=0.5,
        beta2=0.9,
        lambda_cont=None,
        lambda_disc=None,
        noisy_labels=True,
        random_state=0,
        max_steps=None,
    ):
        self.preset = preset
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.lambda_cont = lambda_cont
        self.lambda_disc = lambda_disc
        self.noisy_labels = noisy_labels
        self.random_state = random_state
        self.max_steps = max_steps

    def _config(self) -> ExperimentConfig:
        preset = get_preset(self.preset)
        lc = preset.lambda_cont if self.lambda_cont is None else self.lambda_cont
        ld = preset.lambda_disc if self.lambda_disc is None else self.lambda_disc
        seed = 0 if self.random_state is None else int(self.random_state)
        return ExperimentConfig(
            preset=self.preset,
            loss=LossWeights(lc, ld),
            noisy_labels=NoisyLabelPolicy(enabled=bool(self.noisy_labels)),
            optim=OptimSettings(self.learning_rate, self.beta1, self.beta2, self.batch_size, self.epochs),
            seed=seed,
        )

    def fit(self, X, y=None):
        """Train on images ``X``; ``y`` is ignored (training is unsupervised)."""
        config = self._config()
        X = check_images(X, get_preset(self.preset))
        self.state_ = init_state(config)
        self.history_ = run_epochs(self.state_, X, self.epochs, max_steps=self.max_steps)
        self.n_steps_ = self.state_.step
        return self

    @classmethod
    def from_state(cls, state):
        """Wrap an existing training state (e.g. from ``load_checkpoint``)."""
        cfg = state.config
        est = cls(
            preset=cfg.preset,
            epochs=cfg.optim.epochs,
            batch_size=cfg.optim.batch_size,
            learning_rate=cfg.optim.learning_rate,
            beta1=cfg.optim.beta1,
            beta2=cfg.optim.beta2,
            lambda_cont=cfg.loss.lambda_cont,
            lambda_disc=cfg.loss.lambda_disc,
            noisy_labels=cfg.noisy_labels.enabled,
            random_state=cfg.seed,
        )
        est.state_ = state
        est.history_ = []
        est.n_steps_ = state.step
        return est

    def transform(self, X):
        check_is_fitted(self, "state_")
        X = check_images(X, self.state_.bundle.preset)
        return encode_images(self.state_, X).cpu().numpy()

    def inverse_transform(self, Z):
        check_is_fitted(self, "state_")
        bundle = self.state_.bundle
        Z = check_latents(Z, bundle.preset.latent_dim)
        bundle.eval()
        with torch.no_grad():
            return decode(bundle, Z).cpu().numpy()

    def predict(self, X):
        """Cluster index of each image (argmax of the first categorical Q head)."""
        return classify_latents(self.state_, self.transform(X))

    def fit_predict(self, X, y=None):
        return self.fit(X).predict(X)

    def sample(self, n_samples=1, random_state=None):
        """Generate ``n_samples`` images; returns ``(images, codes)``."""
        check_is_fitted(self, "state_")
        spec = self.state_.config.codes
        code = sample_code(spec, np.random.default_rng(random_state), n=n_samples)
        return render_inputs(self.state_, assemble(code, spec)), code
