import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from latentgan import LatentGANAutoencoder
from latentgan.training import init_state
from latentgan.config import ExperimentConfig


@pytest.fixture(scope="module")
def fitted():
    X = np.random.default_rng(0).integers(0, 256, size=(40, 4, 4), dtype=np.uint8)
    return LatentGANAutoencoder(preset="tiny", epochs=2, batch_size=8, random_state=1).fit(X), X


def test_params_and_clone():
    est = LatentGANAutoencoder(preset="tiny", epochs=3, lambda_disc=0.5)
    params = est.get_params()
    assert params["epochs"] == 3 and params["lambda_disc"] == 0.5 and params["lambda_cont"] is None
    c = clone(est)
    assert c.get_params() == params and c is not est
    est.set_params(epochs=7)
    assert est.epochs == 7


def test_fit_attributes(fitted):
    est, _ = fitted
    assert est.n_steps_ == 2 * (40 // 8) == len(est.history_)
    assert est.state_.config.loss.lambda_disc == 1.0


def test_transform_inverse_predict_shapes(fitted):
    est, X = fitted
    Z = est.transform(X)
    assert Z.shape == (40, 8) and Z.dtype == np.float32
    R = est.inverse_transform(Z)
    assert R.shape == (40, 1, 4, 4) and np.abs(R).max() <= 1
    y = est.predict(X)
    assert y.shape == (40,) and y.min() >= 0 and y.max() < 3


def test_deterministic_fit():
    X = np.random.default_rng(3).integers(0, 256, size=(16, 4, 4), dtype=np.uint8)
    a = LatentGANAutoencoder(preset="tiny", epochs=1, batch_size=8, random_state=4).fit(X)
    b = LatentGANAutoencoder(preset="tiny", epochs=1, batch_size=8, random_state=4).fit(X)
    assert a.history_ == b.history_
    assert np.array_equal(a.transform(X), b.transform(X))


def test_float_input_accepted(fitted):
    est, X = fitted
    from latentgan.data import preprocess

    F = preprocess(X, 4)
    assert np.array_equal(est.transform(F), est.transform(X))
    assert np.array_equal(est.transform(F[:, 0]), est.transform(X))


def test_input_validation(fitted):
    est, X = fitted
    with pytest.raises(ValueError, match="do not fit"):
        est.transform(np.zeros((2, 1, 5, 5)))
    with pytest.raises(ValueError, match="smaller"):
        est.transform(np.zeros((2, 5, 5), np.uint8))
    with pytest.raises(ValueError, match=r"\[-1, 1\]"):
        est.transform(np.full((2, 1, 4, 4), 3.0))
    with pytest.raises(ValueError, match="empty"):
        est.transform(np.zeros((0, 4, 4), np.uint8))
    with pytest.raises(ValueError, match="latents"):
        est.inverse_transform(np.zeros((2, 7)))
    with pytest.raises(ValueError):
        est.inverse_transform(np.full((2, 8), np.nan))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        LatentGANAutoencoder(preset="tiny").transform(np.zeros((1, 4, 4), np.uint8))


def test_sample(fitted):
    est, _ = fitted
    imgs, code = est.sample(5, random_state=2)
    imgs2, _ = est.sample(5, random_state=2)
    assert imgs.shape == (5, 1, 4, 4) and np.array_equal(imgs, imgs2)
    assert code.cat_indices()[0].shape == (5,)


def test_from_state_and_max_steps():
    st = init_state(ExperimentConfig(preset="tiny", seed=9))
    est = LatentGANAutoencoder.from_state(st)
    assert est.random_state == 9 and est.n_steps_ == 0
    X = np.random.default_rng(0).integers(0, 256, size=(32, 4, 4), dtype=np.uint8)
    e = LatentGANAutoencoder(preset="tiny", epochs=5, batch_size=8, max_steps=3).fit(X)
    assert e.n_steps_ == 3


def test_fit_predict_matches(fitted):
    _, X = fitted
    est = LatentGANAutoencoder(preset="tiny", epochs=1, batch_size=8, random_state=1)
    assert np.array_equal(est.fit_predict(X), est.predict(X))
