import math
import os
import numpy as np
import pytest
from scipy.special import expit, log_expit
from skewrec import corpus, kernels, metrics, skewopt
from skewrec.embed import EmbeddingModel, init_model
from skewrec.notify import TrainNotify
from skewrec.skewopt import ConfigError, DivergenceError, SkewOptConfig

BPR = SkewOptConfig(xi=0.0, omega=1.0, eta=1)


class RecordingNotify(TrainNotify):
    def __init__(self):
        super().__init__()
        self.results = []
        self.started = False
        self.finished = False

    def start(self, message=None):
        self.started = True

    def update(self, result):
        super().update(result)
        self.results.append(result)

    def finish(self, message=None):
        self.finished = True


@pytest.mark.parametrize('xhat', [-30.0, -2.5, -1e-3, 0.0, 0.7, 4.0, 40.0])
def test_bpr_reduction_is_exact(xhat):
    assert skewopt.log_likelihood(xhat, BPR) == float(log_expit(xhat))
    assert skewopt.grad_pair(xhat, BPR) == float(expit(-xhat))


@pytest.mark.parametrize('xhat', [-1e8, -1e6, -1e3, 1e3, 1e6, 1e8])
def test_log_likelihood_is_stable(xhat):
    cfg = SkewOptConfig(xi=11.0, omega=3.0, eta=5)
    value = skewopt.log_likelihood(xhat, cfg)
    assert value <= 0.0
    assert math.isfinite(value)
    grad = skewopt.grad_pair(xhat, cfg)
    assert math.isfinite(grad)
    assert 0.0 <= grad <= cfg.clip


def test_log_likelihood_rejects_non_finite():
    with pytest.raises(ValueError):
        skewopt.log_likelihood(float("nan"), BPR)


def test_gradient_is_clipped():
    cfg = SkewOptConfig(xi=11.0, omega=1.0, eta=5)
    assert skewopt.grad_pair(0.0, cfg, clipped=False) > cfg.clip
    assert skewopt.grad_pair(0.0, cfg) == cfg.clip


def test_gradient_is_nonnegative_and_vanishes_far_above_xi():
    cfg = SkewOptConfig(xi=5.0, omega=2.0, eta=3)
    grid = np.linspace(-20, 40, 601)
    grads = [skewopt.grad_pair(x, cfg, clipped=False) for x in grid]
    assert min(grads) >= 0.0
    assert grads[-1] < 1e-12


def test_loss_term_fields():
    cfg = SkewOptConfig(xi=2.0, omega=2.0, eta=3)
    term = skewopt.loss_term(1.0, cfg)
    assert term.z == -0.5
    assert term.zeta == -0.125
    assert term.loglik == pytest.approx(float(log_expit(-0.125)), abs=1e-15)
    assert term.dloss_dxhat == pytest.approx(float(expit(0.125)) * 3 * 0.25 / 2, abs=1e-15)


STEP = 1e-5


def triple_objective(user, pos, neg, cfg) -> float:
    return skewopt.log_likelihood(float(user @ (pos - neg)), cfg)


def numeric_gradient(user, pos, neg, cfg, step=STEP) -> np.ndarray:
    params = np.concatenate([user, pos, neg])
    d = user.size
    grad = np.empty_like(params)
    for k in range(params.size):
        up, down = params.copy(), params.copy()
        up[k] += step
        down[k] -= step
        grad[k] = (triple_objective(up[:d], up[d:2 * d], up[2 * d:], cfg)
                   - triple_objective(down[:d], down[d:2 * d], down[2 * d:], cfg)) / (2 * step)
    return grad


def test_analytic_gradient_matches_finite_differences():
    rng = np.random.default_rng(2024)
    d = 4
    for n in range(200):
        cfg = SkewOptConfig(xi=float(rng.choice([0.0, 5.0, 11.0])),
                            omega=float(rng.choice([1.0, 2.0, 3.0])),
                            eta=int(rng.choice([1, 3, 5])), lam=0.0)
        user, pos, neg = rng.normal(0.0, 0.5, size=(3, d))
        g = skewopt.grad_pair(float(user @ (pos - neg)), cfg, clipped=False)
        analytic = np.concatenate([g * (pos - neg), g * user, -g * user])
        numeric = numeric_gradient(user, pos, neg, cfg)
        scale = np.maximum(np.abs(analytic), 1e-3 * np.abs(analytic).max() + 1e-300)
        # central differences cannot resolve slopes below the rounding noise of the objective
        value = abs(triple_objective(user, pos, neg, cfg))
        floor = 1e-10 + 10 * np.finfo(float).eps * max(value, 1.0) / STEP
        assert np.all(np.abs(numeric - analytic) <= 1e-5 * scale + floor), (n, cfg)


def test_sgd_step_uses_pre_step_rows():
    cfg = SkewOptConfig(xi=1.0, omega=2.0, eta=3, beta=0.1, lam=0.01)
    model = EmbeddingModel(np.array([[0.3, -0.2]]), np.array([[0.1, 0.4], [-0.5, 0.2]]))
    wu, hi, hj = model.user_vecs[0].copy(), model.item_vecs[0].copy(), model.item_vecs[1].copy()
    g = skewopt.grad_pair(model.score_pair(0, 0, 1), cfg)

    assert skewopt.sgd_step(model, (0, 0, 1), cfg) == g
    np.testing.assert_allclose(model.user_vecs[0], wu + 0.1 * (g * (hi - hj) - 0.01 * wu), rtol=0, atol=1e-15)
    np.testing.assert_allclose(model.item_vecs[0], hi + 0.1 * (g * wu - 0.01 * hi), rtol=0, atol=1e-15)
    np.testing.assert_allclose(model.item_vecs[1], hj + 0.1 * (-g * wu - 0.01 * hj), rtol=0, atol=1e-15)


def test_sgd_step_detects_divergence():
    cfg = SkewOptConfig(beta=1e308, lam=1.0)
    model = EmbeddingModel(np.full((1, 2), 1e10), np.array([[1e10, 1e10], [-1e10, -1e10]]))
    before = model.copy()
    with pytest.raises(DivergenceError, match="non-finite"):
        skewopt.sgd_step(model, (0, 0, 1), cfg)
    assert np.array_equal(model.user_vecs, before.user_vecs)


def test_divergence_error_is_a_value_error():
    assert issubclass(DivergenceError, ValueError)
    with pytest.raises(ValueError):
        skewopt.sgd_step(EmbeddingModel(np.full((1, 2), 1e10), np.array([[1e10, 1e10], [-1e10, -1e10]])),
                         (0, 0, 1), SkewOptConfig(beta=1e308, lam=1.0))


@pytest.mark.parametrize('cfg', [
    BPR,
    SkewOptConfig(xi=2.0, omega=2.0, eta=3),
    SkewOptConfig(xi=11.0, omega=3.0, eta=5),
    SkewOptConfig(xi=0.0, omega=0.5, eta=7),
])
def test_log_likelihood_is_nondecreasing(cfg):
    xhats = np.sort(np.random.default_rng(9).uniform(-20.0, 40.0, size=2000))
    values = np.array([skewopt.log_likelihood(float(x), cfg) for x in xhats])
    assert np.all(np.diff(values) >= -1e-12)
    assert np.all(values <= 0.0)


def test_regularization_alone_shrinks_parameters():
    # xhat = 1600 puts the likelihood gradient below the smallest double
    model = EmbeddingModel(np.array([[40.0]]), np.array([[20.0], [-20.0]]))
    cfg = SkewOptConfig(beta=0.1, lam=0.1)
    norms = [model.squared_norm()]
    for _ in range(5):
        assert skewopt.sgd_step(model, (0, 0, 1), cfg) == 0.0
        norms.append(model.squared_norm())
    assert all(after < before for before, after in zip(norms, norms[1:]))
    assert model.user_vecs[0, 0] == pytest.approx(40.0 * 0.99 ** 5, rel=1e-12)


@pytest.mark.parametrize('seed', range(10))
def test_small_step_increases_triple_likelihood(seed):
    rng = np.random.default_rng(seed)
    cfg = SkewOptConfig(xi=2.0, omega=2.0, eta=3, beta=1e-3, lam=0.0)
    model = EmbeddingModel(rng.normal(0.0, 0.5, size=(1, 4)), rng.normal(0.0, 0.5, size=(2, 4)))
    before = skewopt.objective(model, [(0, 0, 1)], cfg)
    assert skewopt.sgd_step(model, (0, 0, 1), cfg) > 0.0
    assert skewopt.objective(model, [(0, 0, 1)], cfg) > before


def test_kernel_matches_sgd_step():
    rng = np.random.default_rng(17)
    for n in range(50):
        cfg = SkewOptConfig(xi=float(rng.choice([0.0, 2.0, 11.0])),
                            omega=float(rng.choice([0.5, 1.0, 3.0])),
                            eta=int(rng.choice([1, 3, 5])), beta=0.05, lam=0.01)
        model = EmbeddingModel(rng.normal(0.0, 0.5, size=(3, 4)), rng.normal(0.0, 0.5, size=(5, 4)))
        u = int(rng.integers(3))
        i, j = (int(k) for k in rng.choice(5, size=2, replace=False))
        compiled = model.copy()
        xhat = model.score_pair(u, i, j)

        skewopt.sgd_step(model, (u, i, j), cfg)
        failed, loglik = kernels.apply_triples(
            compiled.user_vecs, compiled.item_vecs,
            np.array([u], dtype=np.int64), np.array([i], dtype=np.int64), np.array([j], dtype=np.int64),
            float(cfg.xi), float(cfg.omega), int(cfg.eta), float(cfg.beta), float(cfg.lam), float(cfg.clip))

        assert failed == -1
        assert loglik == pytest.approx(skewopt.log_likelihood(xhat, cfg), rel=1e-12, abs=1e-12), (n, cfg)
        np.testing.assert_allclose(compiled.user_vecs, model.user_vecs, rtol=0, atol=1e-12)
        np.testing.assert_allclose(compiled.item_vecs, model.item_vecs, rtol=0, atol=1e-12)


def test_objective_subtracts_penalty(random_model):
    cfg = SkewOptConfig(lam=0.5)
    triples = [(0, 1, 2), (3, 4, 5)]
    loglik = sum(skewopt.log_likelihood(random_model.score_pair(*t), cfg) for t in triples)
    assert skewopt.objective(random_model, triples, cfg) == pytest.approx(
        loglik - 0.5 * random_model.squared_norm(), abs=1e-12)


@pytest.mark.parametrize('changes', [
    {"eta": 2},
    {"eta": 0},
    {"omega": 0.0},
    {"xi": -1.0},
    {"beta": 0.0},
    {"lam": -0.1},
    {"threads": 0},
    {"dim": 0},
    {"epochs": -1},
    {"clip": float("inf")},
])
def test_config_validation(changes):
    with pytest.raises(ConfigError):
        SkewOptConfig(**changes).validate()


def test_config_merged_ignores_none_and_coerces():
    cfg = SkewOptConfig().merged(xi="4", eta="3", omega=None, lam="0.01", epochs=7.0)
    assert (cfg.xi, cfg.eta, cfg.omega, cfg.lam, cfg.epochs) == (4.0, 3, 1.0, 0.01, 7)
    assert isinstance(cfg.eta, int)


def test_config_from_mapping_aliases_and_unknown_keys():
    assert SkewOptConfig.from_mapping({"lambda": "0.1", "d": "16"}).lam == 0.1
    with pytest.raises(ConfigError, match="unknown"):
        SkewOptConfig.from_mapping({"gamma": 1})
    with pytest.raises(ConfigError, match="expects int"):
        SkewOptConfig.from_mapping({"eta": "3.5"})


def test_read_config(tmp_path):
    path = os.path.join(tmp_path, "run.cfg")
    with open(path, "w", encoding="utf-8") as f:
        f.write("# desk settings\nxi = 11\n\nomega=3   # scale\nlambda = 0.001\n")
    assert skewopt.read_config(path) == {"xi": "11", "omega": "3", "lam": "0.001"}


@pytest.mark.parametrize('content,message', [
    ("xi 11\n", "key = value"),
    ("alpha = 2\n", "unknown"),
    ("xi =\n", "key = value"),
])
def test_read_config_errors(tmp_path, content, message):
    path = os.path.join(tmp_path, "bad.cfg")
    with open(path, "w", encoding="utf-8") as f:
        f.write(content)
    with pytest.raises(ConfigError, match=message):
        skewopt.read_config(path)


def test_train_zero_epochs_returns_initialization(block_data):
    cfg = SkewOptConfig(epochs=0, dim=4, seed=2)
    model = skewopt.train(block_data, cfg)
    init = init_model(block_data.n_users, block_data.n_items, 4, 2)
    assert np.array_equal(model.user_vecs, init.user_vecs)


def test_train_is_bit_identical_single_thread(block_data, fast_cfg):
    first = skewopt.train(block_data, fast_cfg)
    second = skewopt.train(block_data, fast_cfg)
    assert np.array_equal(first.user_vecs, second.user_vecs)
    assert np.array_equal(first.item_vecs, second.item_vecs)
    assert first.user_keys == block_data.user_keys


def test_train_reports_every_epoch_and_improves(block_data):
    notify = RecordingNotify()
    cfg = SkewOptConfig(xi=2.0, omega=2.0, eta=3, epochs=20, dim=8, seed=1)
    skewopt.train(block_data, cfg, notify)
    assert notify.started and notify.finished
    assert [r.epoch for r in notify.results] == list(range(1, 21))
    assert notify.results[-1].loglik > notify.results[0].loglik
    assert all(r.penalty >= 0 for r in notify.results)


def test_train_rejects_invalid_config_before_training(block_data):
    notify = RecordingNotify()
    with pytest.raises(ConfigError):
        skewopt.train(block_data, SkewOptConfig(eta=4), notify)
    assert not notify.started


def test_train_divergence_names_epoch(block_data):
    cfg = SkewOptConfig(beta=1e300, lam=1.0, epochs=3, dim=4)
    with pytest.raises(DivergenceError, match="epoch 1"):
        skewopt.train(block_data, cfg)


@pytest.mark.parametrize('cfg', [
    BPR,
    SkewOptConfig(xi=2.0, omega=2.0, eta=3),
])
def test_training_separates_blocks(cfg):
    # users 0-24 like items 0-19, users 25-49 like items 20-39
    pairs = [(f"u{u}", f"i{i}") for u in range(50) for i in range(40) if (u < 25) == (i < 20)]
    data = corpus.build_interactions(pairs)
    model = skewopt.train(data, cfg.merged(epochs=50, dim=8, seed=0))
    assert model.is_finite()
    assert metrics.train_auc_micro(model, data) > 0.95


def test_multithreaded_training_matches_single_thread_auc(block_data):
    base = SkewOptConfig(epochs=60, dim=8, seed=3)
    single = skewopt.train(block_data, base)
    parallel = skewopt.train(block_data, base.merged(threads=8))
    assert parallel.is_finite()
    assert abs(metrics.train_auc_micro(single, block_data)
               - metrics.train_auc_micro(parallel, block_data)) < 0.02


def test_gradient_curve_smooths_with_omega():
    cfg = SkewOptConfig(xi=8.0, eta=3)
    frame = skewopt.gradient_curve(np.linspace(-5, 15, 21), cfg, [1.0, 2.0, 3.0])
    assert list(frame.columns) == ["xhat", "omega", "grad", "grad_clipped"]
    assert len(frame) == 63
    at_low = frame[frame["xhat"] == -5.0].sort_values("omega")["grad"].tolist()
    assert at_low[0] > at_low[1] > at_low[2]
    assert (frame["grad_clipped"] <= cfg.clip).all()
    assert (frame["grad_clipped"] <= frame["grad"]).all()
