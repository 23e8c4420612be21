import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flexspec.models import (
    HeadParams,
    TrainingConfig,
    TrainingError,
    evaluate_loss,
    fine_tune,
    loss_and_gradients,
    loss_feat,
    loss_kd,
    make_base_target,
    make_draft,
    markov_corpus,
    measure_acceptance,
    prepare_data,
    train_draft,
)
from flexspec.models.training import TrainingData
from oracles import central_difference


def test_loss_feat_examples():
    h = np.random.default_rng(0).normal(size=(5, 4))
    assert loss_feat(h, h, np.eye(4)) == 0.0
    assert loss_feat(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), np.eye(2)) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        loss_feat(np.ones((2, 3)), np.ones((2, 4)), np.eye(3))


@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.integers(0, 1000))
def test_loss_feat_homogeneous(c, seed):
    rng = np.random.default_rng(seed)
    hd, ht, w = rng.normal(size=(3, 4)), rng.normal(size=(3, 4)), rng.normal(size=(4, 4))
    assert loss_feat(c * hd, c * ht, w) == pytest.approx(c * c * loss_feat(hd, ht, w), rel=1e-10)


def test_loss_kd_examples():
    z = np.random.default_rng(1).normal(size=(4, 6))
    assert loss_kd(z, z, 2.0) == pytest.approx(0.0, abs=1e-12)
    expect = 0.25 * np.log(0.5) + 0.75 * np.log(1.5)
    assert loss_kd(np.array([0.0, np.log(3)]), np.array([0.0, 0.0]), 1.0) == pytest.approx(expect, rel=1e-12)
    assert expect == pytest.approx(0.1308, abs=1e-4)
    # Teacher-first direction: swapping arguments changes the value.
    assert loss_kd(np.array([0.0, 0.0]), np.array([0.0, np.log(3)]), 1.0) != pytest.approx(expect)
    with pytest.raises(ValueError):
        loss_kd(np.array([0.0, np.inf]), np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        loss_kd(np.zeros(2), np.zeros(3), 1.0)


@given(st.integers(0, 10_000), st.floats(0.3, 5))
def test_loss_kd_nonnegative(seed, temp):
    rng = np.random.default_rng(seed)
    zt, zd = rng.normal(scale=3, size=(3, 8)), rng.normal(scale=3, size=(3, 8))
    assert loss_kd(zt, zd, temp) >= -1e-12


def _problem(seed, dim=16, hidden=32, vocab=64, n=8, lambda1=1.0, lambda2=1.0):
    rng = np.random.default_rng(seed)
    head = HeadParams(rng.normal(size=(hidden, dim)) * 0.5, rng.normal(size=hidden) * 0.1,
                      rng.normal(size=(dim, hidden)) * 0.3, rng.normal(size=dim) * 0.1)
    w_p = np.eye(dim) + 0.1 * rng.normal(size=(dim, dim))
    lm = rng.normal(size=(vocab, dim))
    a = np.tanh(rng.normal(size=(n, dim)))
    h_t = np.tanh(rng.normal(size=(n, dim)))
    z_t = h_t @ lm.T
    cfg = TrainingConfig(lambda1=lambda1, lambda2=lambda2, temperature=2.0)
    return head, w_p, lm, a, h_t, z_t, cfg


def _reference_loss(head, w_p, lm, a, h_t, z_t, cfg):
    g = head(a)
    return cfg.lambda1 * loss_feat(g, h_t, w_p) + cfg.lambda2 * loss_kd(z_t, g @ lm.T, cfg.temperature)


def _rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-30)


@pytest.mark.parametrize("weights", [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0), (0.3, 2.0)])
def test_gradients_match_finite_differences(weights):
    for seed in range(3):
        head, w_p, lm, a, h_t, z_t, cfg = _problem(seed, lambda1=weights[0], lambda2=weights[1])
        loss, grads = loss_and_gradients(head, w_p, lm, a, h_t, z_t, cfg)
        assert loss == pytest.approx(_reference_loss(head, w_p, lm, a, h_t, z_t, cfg), rel=1e-12)
        params = {**{k: np.array(v) for k, v in head.as_dict().items()}, "w_p": np.array(w_p)}

        def f():
            h = HeadParams(params["W1"], params["b1"], params["W2"], params["b2"])
            return _reference_loss(h, params["w_p"], lm, a, h_t, z_t, cfg)

        for name in ("W1", "b1", "W2", "b2", "w_p"):
            fd = central_difference(f, params[name])
            if np.linalg.norm(fd) == 0:
                assert np.linalg.norm(grads[name]) == 0
            else:
                assert _rel_err(grads[name], fd) < 1e-4, name


def test_feature_gradient_vanishes_at_exact_minimum():
    head, w_p, lm, a, _, z_t, _ = _problem(0)
    h_t = head(a) @ w_p.T
    _, grads = loss_and_gradients(head, w_p, lm, a, h_t, z_t, TrainingConfig(lambda1=1.0, lambda2=0.0))
    for g in grads.values():
        assert np.abs(g).max() < 1e-14


def test_only_trainable_groups_get_gradients():
    head, w_p, lm, a, h_t, z_t, cfg = _problem(0)
    _, grads = loss_and_gradients(head, w_p, lm, a, h_t, z_t, cfg)
    assert set(grads) == {"W1", "b1", "W2", "b2", "w_p"}


def test_config_validation():
    with pytest.raises(ValueError):
        TrainingConfig(lambda1=0, lambda2=0)
    with pytest.raises(ValueError):
        TrainingConfig(temperature=0)
    with pytest.raises(ValueError):
        TrainingConfig(lambda1=-1)


@pytest.fixture(scope="module")
def small_setup():
    base = make_base_target(seed=1)
    corpus = markov_corpus(200, 16, 64, seed=1)
    return base, corpus


def test_zero_steps_is_init(small_setup):
    base, corpus = small_setup
    cfg = TrainingConfig(steps=0, seed=5)
    trained = train_draft(base, corpus, cfg)
    init = make_draft(base, seed=5)
    for k, v in init.head.as_dict().items():
        np.testing.assert_array_equal(trained.head.as_dict()[k], v)
    np.testing.assert_array_equal(trained.w_p, np.eye(base.dim))


def test_training_deterministic_and_frozen(small_setup):
    base, corpus = small_setup
    cfg = TrainingConfig(steps=60, seed=2)
    a = train_draft(base, corpus, cfg)
    b = train_draft(base, corpus, cfg)
    for k in ("W1", "b1", "W2", "b2"):
        assert a.head.as_dict()[k].tobytes() == b.head.as_dict()[k].tobytes()
    assert a.anchor is base.anchor
    assert a.anchor.weight.tobytes() == make_base_target(seed=1).anchor.weight.tobytes()
    assert a.lm_head.tobytes() == make_base_target(seed=1).lm_head.tobytes()
    assert a.train_history[-1] < a.train_history[0]


def test_training_requires_version_zero(small_setup):
    base, corpus = small_setup
    with pytest.raises(ValueError):
        train_draft(fine_tune(base, 1.0, 0), corpus, TrainingConfig(steps=1))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reports_step(small_setup):
    base, corpus = small_setup
    with pytest.raises(TrainingError) as exc:
        train_draft(base, corpus, TrainingConfig(steps=50, lr=1e200))
    assert exc.value.step >= 0
    assert "step" in str(exc.value)


def test_feature_loss_on_reachable_teacher_drops_90_percent(small_setup):
    base, corpus = small_setup
    draft = make_draft(base, seed=3)
    data = prepare_data(base, draft, corpus, 16)
    teacher = HeadParams.random(base.dim, 32, np.random.default_rng(77), out_scale=1.0)
    h_t = teacher(data.a)
    reach = TrainingData(data.a, h_t, data.z_t)
    cfg = TrainingConfig(lambda1=1.0, lambda2=0.0, steps=2000, seed=3)
    before = evaluate_loss(draft, reach, cfg)
    after = evaluate_loss(train_draft(base, corpus, cfg, draft=draft, data=reach), reach, cfg)
    assert after <= 0.1 * before


def test_trained_draft_acceptance_on_held_out(trained_pair):
    base, draft = trained_pair
    assert draft.train_history[-1] < draft.train_history[0]
    held_out = markov_corpus(1000, 16, 64, seed=12345).sequences
    assert measure_acceptance(draft, base, held_out, k=1, rounds=1) >= 0.6
