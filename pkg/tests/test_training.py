import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from svgp_fraud import kernels as K
from svgp_fraud import svgp
from svgp_fraud.data import Dataset, kmeans_init
from svgp_fraud.errors import ShapeMismatch
from svgp_fraud.likelihoods import predictive_prob
from svgp_fraud.training import (
    Adam,
    AdamState,
    Sgd,
    TraceRecord,
    TrainConfig,
    TrainTrace,
    adam_step,
    minibatches,
    train,
)


def test_adam_zero_gradient_leaves_params():
    state, p = adam_step(AdamState.zeros(3), [1.0, 2.0, 3.0], np.zeros(3))
    np.testing.assert_array_equal(p, [1.0, 2.0, 3.0])
    assert state.t == 1


@given(st.floats(-1e3, 1e3).filter(lambda g: abs(g) > 1e-6), st.floats(1e-4, 1.0))
def test_adam_first_step_is_bounded_by_lr(g, lr):
    _, p = adam_step(AdamState.zeros(1), [0.0], [g], lr=lr)
    assert abs(p[0]) <= lr * (1 + 1e-12)
    assert np.sign(p[0]) == np.sign(g)


def test_adam_climbs_a_concave_quadratic():
    state, x = AdamState.zeros(1), np.array([0.0])
    for _ in range(200):
        state, x = adam_step(state, x, -2 * (x - 3.0), lr=0.1)
    assert abs(x[0] - 3.0) <= 1e-2


def test_adam_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        adam_step(AdamState.zeros(2), np.zeros(3), np.zeros(3))


def test_optimizer_configs_validate():
    with pytest.raises(ValueError):
        Adam(lr=0)
    with pytest.raises(ValueError):
        Adam(beta1=1.0)
    with pytest.raises(ValueError):
        Sgd(lr=-1)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)


@given(st.integers(1, 300), st.integers(1, 50), st.integers(0, 1000), st.integers(0, 20))
def test_minibatches_partition(n, b, seed, epoch):
    b = min(b, n)
    batches = list(minibatches(n, b, seed, epoch))
    assert np.array_equal(np.sort(np.concatenate(batches)), np.arange(n))
    assert all(len(x) == b for x in batches[:-1])
    again = list(minibatches(n, b, seed, epoch))
    assert all(np.array_equal(x, y) for x, y in zip(batches, again))


def test_minibatch_orders_differ_between_epochs():
    a = np.concatenate(list(minibatches(100, 10, 42, 0)))
    b = np.concatenate(list(minibatches(100, 10, 42, 1)))
    assert not np.array_equal(a, b)


def test_batch_larger_than_data_rejected():
    with pytest.raises(ValueError):
        list(minibatches(5, 6, 0, 0))


def blob_model(blobs, M=8):
    Z = kmeans_init(blobs, M, seed=0)
    return svgp.init_model(K.rbf(1.0, 2.0), Z)


def test_training_on_blobs(blobs):
    model, trace = train(blob_model(blobs), blobs, TrainConfig(epochs=50, batch_size=100))
    assert trace.elbos[-1] > trace.elbos[0]
    assert [r.step for r in trace.records] == list(range(0, 201, 4))
    p, _, _ = svgp.predict(model, blobs.X)
    assert np.mean((p >= 0.5) == (blobs.y == 1)) >= 0.95


def test_zero_epochs_is_identity(blobs):
    model = blob_model(blobs)
    out, trace = train(model, blobs, TrainConfig(epochs=0))
    assert out is model and trace.records == []


def test_frozen_inducing_inputs_are_bit_identical(blobs):
    model = blob_model(blobs)
    out, _ = train(model, blobs, TrainConfig(epochs=3, freeze_inducing=True))
    np.testing.assert_array_equal(out.Z, model.Z)
    assert not np.array_equal(out.q.m, model.q.m)
    # hyperparameters are fixed unless asked for
    assert out.kernel == model.kernel


def test_hyperparameters_move_when_trained(blobs):
    model = blob_model(blobs)
    out, _ = train(model, blobs, TrainConfig(epochs=2, train_hyperparams=True))
    assert out.kernel != model.kernel


def test_training_is_deterministic(blobs):
    cfg = TrainConfig(epochs=4, batch_size=64, seed=7)
    a, ta = train(blob_model(blobs), blobs, cfg)
    b, tb = train(blob_model(blobs), blobs, cfg)
    np.testing.assert_array_equal(svgp.pack(a), svgp.pack(b))
    np.testing.assert_array_equal(ta.elbos, tb.elbos)


def test_small_step_full_batch_sgd_is_nearly_monotone(blobs):
    cfg = TrainConfig(Sgd(1e-3), batch_size=blobs.N, epochs=200, elbo_eval_every=1)
    _, trace = train(blob_model(blobs, M=6), blobs, cfg)
    e = trace.elbos
    assert np.mean(np.diff(e) >= 0) >= 0.95


def test_shape_mismatch_rejected(blobs):
    bad = Dataset(np.zeros((10, 3)), np.r_[np.zeros(5), np.ones(5)].astype(int))
    with pytest.raises(ShapeMismatch):
        train(blob_model(blobs), bad, TrainConfig(epochs=1))


def test_trace_round_trip():
    tr = TrainTrace()
    tr.append(TraceRecord(0, -413.421836491342, 0.0, 0, 0.0))
    tr.append(TraceRecord(4, -1.0 / 3.0, 1e-17, 2, 0.25))
    back = TrainTrace.from_tsv(tr.to_tsv())
    np.testing.assert_array_equal(back.elbos, tr.elbos)
    assert back.records[1].kl == 1e-17
    with pytest.raises(ValueError):
        tr.append(TraceRecord(4, 0.0, 0.0, 0, 0.0))


def test_config_round_trip():
    for cfg in (TrainConfig(), TrainConfig(Sgd(0.5), 7, 3, 11, True, True, 2)):
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg


def test_predictive_probability_is_monotone_in_mean():
    mu = np.linspace(-4, 4, 50)
    p = predictive_prob(mu, np.full(50, 2.0))
    assert np.all(np.diff(p) > 0)
