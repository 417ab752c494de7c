import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from fdcheck import check_gradients
from latentgan.codes import CodeSpec, LatentCode, sample_code
from latentgan.losses import (
    LossWeights,
    NoisyLabelPolicy,
    d_loss,
    g_adv_loss,
    info_loss,
    info_terms,
    reconstruction_loss,
)
from latentgan.networks import CodePosterior

OFF = NoisyLabelPolicy(enabled=False)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# scalar oracles: plain python loops over floats, no torch


def bce_scalar(p, t):
    return -(t * math.log(p) + (1 - t) * math.log(1 - p))


def ce_scalar(logits, cls):
    m = max(logits)
    return -(logits[cls] - m - math.log(sum(math.exp(v - m) for v in logits)))


def test_recon_identity_and_constant():
    x = torch.rand(3, 1, 4, 4)
    assert reconstruction_loss(x, x).item() == 0.0
    assert reconstruction_loss(torch.ones(2, 1, 3, 3), -torch.ones(2, 1, 3, 3)).item() == 4.0


def test_recon_brute_force(rng):
    for n in range(1, 9):
        a = rng.normal(size=(n, 1, 2, 2))
        b = rng.normal(size=(n, 1, 2, 2))
        total = 0.0
        for u, v in zip(a.ravel(), b.ravel()):
            total += (u - v) ** 2
        got = reconstruction_loss(torch.tensor(a), torch.tensor(b)).item()
        assert _rel(got, total / a.size) < 1e-10


def test_recon_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        reconstruction_loss(torch.zeros(1, 1, 4, 4), torch.zeros(1, 1, 4, 3))


def test_d_loss_symmetric():
    p = torch.full((6,), 0.5, dtype=torch.float64)
    assert abs(d_loss(p, p, OFF).item() - math.log(2)) < 1e-15


def test_d_loss_perfect_discriminator():
    eps = 1e-12
    v = d_loss(torch.full((4,), 1 - eps, dtype=torch.float64), torch.full((4,), eps, dtype=torch.float64), OFF)
    assert 0 <= v.item() < 1e-10


def test_binary_entropy_value():
    p = torch.tensor([0.9], dtype=torch.float64)
    got = torch.nn.functional.binary_cross_entropy(p, p).item()
    assert abs(got - 0.3250829733914482) < 1e-12
    assert _rel(got, bce_scalar(0.9, 0.9)) < 1e-12


@pytest.mark.parametrize("n", [1, 3, 8])
def test_d_loss_and_g_loss_brute_force(rng, n):
    pr = rng.uniform(0.01, 0.99, n)
    pf = rng.uniform(0.01, 0.99, n)
    want_d = 0.5 * (sum(bce_scalar(p, 1.0) for p in pr) / n + sum(bce_scalar(p, 0.0) for p in pf) / n)
    got_d = d_loss(torch.tensor(pr), torch.tensor(pf), OFF).item()
    assert _rel(got_d, want_d) < 1e-10
    want_g = sum(-math.log(p) for p in pf) / n
    assert _rel(g_adv_loss(torch.tensor(pf)).item(), want_g) < 1e-10


def test_d_loss_noisy_brute_force():
    pol = NoisyLabelPolicy()
    pr = np.array([0.7, 0.95, 0.4])
    pf = np.array([0.1, 0.3, 0.6])
    r = np.random.default_rng(5)
    tr = r.uniform(0.8, 1.0, 3)
    tf = r.uniform(0.0, 0.2, 3)
    want = 0.5 * (np.mean([bce_scalar(p, t) for p, t in zip(pr, tr)]) + np.mean([bce_scalar(p, t) for p, t in zip(pf, tf)]))
    assert _rel(d_loss(torch.tensor(pr), torch.tensor(pf), pol, seed=5).item(), want) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31))
def test_d_loss_noisy_bounded_by_endpoints(n, seed):
    r = np.random.default_rng(seed)
    pr = torch.tensor(r.uniform(0.01, 0.99, n))
    pf = torch.tensor(r.uniform(0.01, 0.99, n))
    pol = NoisyLabelPolicy()
    v = d_loss(pr, pf, pol, seed=seed).item()

    def half(probs, interval):
        # BCE is linear in the target: each sample lies between its endpoint values
        ends = [torch.nn.functional.binary_cross_entropy(probs, torch.full_like(probs, t), reduction="none") for t in interval]
        return torch.minimum(*ends).mean().item(), torch.maximum(*ends).mean().item()

    (rlo, rhi), (flo, fhi) = half(pr, pol.real_interval), half(pf, pol.fake_interval)
    assert 0.5 * (rlo + flo) - 1e-12 <= v <= 0.5 * (rhi + fhi) + 1e-12


def test_d_loss_noise_reproducible():
    p = torch.tensor([0.3, 0.6], dtype=torch.float64)
    a = d_loss(p, p, NoisyLabelPolicy(), seed=3)
    b = d_loss(p, p, NoisyLabelPolicy(), seed=3)
    assert a.item() == b.item()


def test_g_adv_examples():
    assert abs(g_adv_loss(torch.full((3,), 0.5, dtype=torch.float64)).item() - math.log(2)) < 1e-15
    assert abs(g_adv_loss(torch.tensor([math.exp(-1)], dtype=torch.float64)).item() - 1.0) < 1e-15
    assert g_adv_loss(torch.tensor([1 - 1e-12], dtype=torch.float64)).item() < 1e-10


def test_policy_validation():
    with pytest.raises(ValueError):
        NoisyLabelPolicy(real_interval=(0.1, 0.3))
    with pytest.raises(ValueError):
        NoisyLabelPolicy(fake_interval=(0.0, 1.0))
    with pytest.raises(ValueError):
        LossWeights(lambda_cont=-1)


def _code(cls, cont, k):
    cls = np.asarray(cls)
    return LatentCode(np.zeros((len(cls), 0)), [np.eye(k)[cls]], np.asarray(cont, dtype=np.float64).reshape(len(cls), -1))


def test_info_uniform_logits():
    code = _code([3, 7], np.zeros((2, 0)), 10)
    post = CodePosterior([torch.zeros(2, 10, dtype=torch.float64)], torch.zeros(2, 0, dtype=torch.float64))
    cat, cont = info_terms(post, code, LossWeights(1.0, 1.0))
    assert abs(cat.item() - math.log(10)) < 1e-15
    assert cont.item() == 0.0


def test_info_peaked_logit():
    logits = torch.zeros(1, 10, dtype=torch.float64)
    logits[0, 0] = 2.0
    post = CodePosterior([logits], torch.zeros(1, 0, dtype=torch.float64))
    v = info_loss(post, _code([0], np.zeros((1, 0)), 10), LossWeights(1.0, 1.0)).item()
    assert abs(v - (math.log(math.exp(2) + 9) - 2)) < 1e-14
    assert abs(v - 0.7966138010382244) < 1e-12


def test_info_exact_recovery_of_cont():
    c = np.array([[0.3, -0.5], [0.1, 0.9]])
    post = CodePosterior([torch.zeros(2, 3, dtype=torch.float64)], torch.tensor(c))
    _, cont = info_terms(post, _code([0, 1], c, 3), LossWeights(1.0, 1.0))
    assert cont.item() == 0.0


@pytest.mark.parametrize("n", [1, 4, 8])
def test_info_brute_force(rng, n):
    spec = CodeSpec(2, (5, 3), ((-1, 1), (-1, 1), (-1, 1)))
    code = sample_code(spec, rng, n=n)
    logits = [torch.tensor(rng.normal(size=(n, k))) for k in spec.categoricals]
    means = torch.tensor(rng.normal(size=(n, 3)))
    w = LossWeights(0.7, 0.3)
    got = info_loss(CodePosterior(logits, means), code, w).item()
    cat = 0.0
    for head, onehot in zip(logits, code.cat_onehots):
        cat += sum(ce_scalar(head[i].tolist(), int(np.argmax(onehot[i]))) for i in range(n)) / n
    mse = sum((means[i, j].item() - code.cont_values[i, j]) ** 2 for i in range(n) for j in range(3)) / (3 * n)
    assert _rel(got, 0.3 * cat + 0.7 * mse) < 1e-10


@pytest.mark.parametrize("c", [0.5, 2.0, 7.0])
def test_info_scales_with_weights(rng, c):
    spec = CodeSpec(2, (4,), ((-1, 1),))
    code = sample_code(spec, rng, n=6)
    post = CodePosterior([torch.tensor(rng.normal(size=(6, 4)))], torch.tensor(rng.normal(size=(6, 1))))
    base = info_loss(post, code, LossWeights(1.5, 0.25)).item()
    scaled = info_loss(post, code, LossWeights(1.5 * c, 0.25 * c)).item()
    assert _rel(scaled, c * base) < 1e-14


def test_info_layout_mismatch():
    code = _code([0], np.zeros((1, 1)), 3)
    with pytest.raises(ValueError, match="categorical heads"):
        info_loss(CodePosterior([], torch.zeros(1, 1)), code, LossWeights())
    with pytest.raises(ValueError, match="continuous"):
        info_loss(CodePosterior([torch.zeros(1, 3)], torch.zeros(1, 2)), code, LossWeights())
    with pytest.raises(ValueError, match="cat0"):
        info_loss(CodePosterior([torch.zeros(1, 4)], torch.zeros(1, 1)), code, LossWeights())


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31))
def test_losses_nonnegative_finite(n, seed):
    r = np.random.default_rng(seed)
    p = torch.tensor(r.uniform(1e-6, 1 - 1e-6, n))
    q = torch.tensor(r.uniform(1e-6, 1 - 1e-6, n))
    spec = CodeSpec(1, (3,), ((-1, 1),))
    code = sample_code(spec, r, n=n)
    post = CodePosterior([torch.tensor(r.normal(0, 10, (n, 3)))], torch.tensor(r.normal(0, 10, (n, 1))))
    for v in (
        d_loss(p, q, NoisyLabelPolicy(), r),
        d_loss(p, q, OFF),
        g_adv_loss(q),
        info_loss(post, code, LossWeights()),
        reconstruction_loss(p, q),
    ):
        assert math.isfinite(v.item()) and v.item() >= 0


# gradients vs central differences


def test_grad_info_loss(rng):
    spec = CodeSpec(2, (5, 3), ((-1, 1), (-1, 1)))
    code = sample_code(spec, rng, n=6)
    logits = [torch.tensor(rng.normal(size=(6, k))) for k in spec.categoricals]
    means = torch.tensor(rng.normal(size=(6, 2)))
    w = LossWeights(1.0, 0.1)
    assert check_gradients(lambda: info_loss(CodePosterior(logits, means), code, w), logits + [means]) < 1e-4


def test_grad_d_and_g(rng):
    pr = torch.tensor(rng.uniform(0.1, 0.9, 5))
    pf = torch.tensor(rng.uniform(0.1, 0.9, 5))
    assert check_gradients(lambda: d_loss(pr, pf, NoisyLabelPolicy(), seed=1), [pr, pf]) < 1e-4
    assert check_gradients(lambda: d_loss(pr, pf, OFF), [pr, pf]) < 1e-4
    assert check_gradients(lambda: g_adv_loss(pf), [pf]) < 1e-4


def test_grad_recon(rng):
    a = torch.tensor(rng.normal(size=(2, 1, 2, 2)))
    b = torch.tensor(rng.normal(size=(2, 1, 2, 2)))
    assert check_gradients(lambda: reconstruction_loss(a, b), [a, b]) < 1e-4
