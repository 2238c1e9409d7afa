import numpy as np
import pytest

from siren.errors import TrainingDiverged
from siren.nn import TrainConfig, evaluate, init_params, predict, train
from siren.nn.model import default_architecture
from siren.nn.training import read_history, write_history


def toy_set(n=400, seed=0):
    """Four linearly separable blobs in the first two of 68 features."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(4), n // 4)
    centers = np.array([[4, 4], [-4, 4], [-4, -4], [4, -4]], dtype=float)
    X = rng.normal(0, 0.5, (n, 68))
    X[:, :2] += centers[labels]
    X = np.abs(X)  # features are non-negative counts in practice
    X[:, 66] = labels % 2
    X[:, 67] = labels // 2
    Y = np.eye(4)[labels]
    perm = rng.permutation(n)
    return X[perm], Y[perm]


def test_toy_set_reaches_095():
    X, Y = toy_set()
    res = train(X[:300], Y[:300], X[300:], Y[300:], TrainConfig(batch_size=32, max_epochs=50, patience=5, seed=1))
    assert evaluate(res.params, X[300:], Y[300:]).accuracy >= 0.95
    assert len(res.history) <= 50


def test_patience_zero_runs_one_epoch():
    X, Y = toy_set()
    res = train(X[:300], Y[:300], X[300:], Y[300:], TrainConfig(patience=0, seed=0))
    assert len(res.history) == 1 and res.best_epoch == 1


def test_best_epoch_has_min_val_loss():
    X, Y = toy_set(seed=3)
    res = train(X[:300], Y[:300], X[300:], Y[300:], TrainConfig(batch_size=16, max_epochs=15, patience=3, seed=2))
    losses = [h.val_loss for h in res.history]
    assert res.history[res.best_epoch - 1].val_loss == min(losses)
    assert abs(evaluate(res.params, X[300:], Y[300:]).loss - min(losses)) < 1e-12


def test_determinism():
    X, Y = toy_set(seed=4)
    cfg = TrainConfig(batch_size=32, max_epochs=4, seed=9)
    a = train(X[:300], Y[:300], X[300:], Y[300:], cfg)
    b = train(X[:300], Y[:300], X[300:], Y[300:], cfg)
    assert a.params.fingerprint() == b.params.fingerprint()
    assert all(np.array_equal(a.params.tensors[k], b.params.tensors[k]) for k in a.params.tensors)
    c = train(X[:300], Y[:300], X[300:], Y[300:], TrainConfig(batch_size=32, max_epochs=4, seed=10))
    assert a.params.fingerprint() != c.params.fingerprint()


def test_standardization_from_train_only():
    X, Y = toy_set()
    res = train(X[:300], Y[:300], X[300:], Y[300:], TrainConfig(max_epochs=1, seed=0))
    assert np.allclose(res.params.feature_mean, X[:300].mean(axis=0), atol=1e-5)


def test_non_finite_loss_aborts():
    X, Y = toy_set()
    X[5, 3] = np.nan
    with pytest.raises(TrainingDiverged):
        train(X[:300], Y[:300], X[300:], Y[300:], TrainConfig(max_epochs=2, seed=0))


@pytest.mark.parametrize("kwargs", [{"learning_rate": 0}, {"beta1": 1.0}, {"beta2": 0.0}, {"batch_size": 1},
                                    {"max_epochs": 0}, {"patience": -1}, {"epsilon": -1e-8}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_history_round_trip(tmp_path):
    X, Y = toy_set()
    res = train(X[:300], Y[:300], X[300:], Y[300:], TrainConfig(max_epochs=3, patience=5, seed=0))
    write_history(res.history, tmp_path / "h.csv")
    assert read_history(tmp_path / "h.csv") == res.history


def test_architecture():
    layers = default_architecture()
    dense = [(l.input_dim, l.output_dim) for l in layers if l.kind == "dense"]
    assert dense == [(68, 300), (300, 200), (200, 100), (100, 4)]
    kinds = [l.kind for l in layers]
    assert kinds.count("dropout") == 2 and all(l.rate == 0.2 for l in layers if l.kind == "dropout")
    assert kinds[-3:] == ["batchnorm", "dense", "softmax"]
    assert [l.activation for l in layers if l.kind == "dense"] == ["selu", "selu", "selu", "none"]


def test_predict_contract(rng):
    params = init_params(rng)
    for _ in range(20):
        v = rng.uniform(0, 50, 68)
        p = predict(params, v)
        assert abs(float(p.probabilities.sum()) - 1) < 1e-6
        assert p.label in range(4)
        again = predict(params, v)
        assert np.array_equal(p.probabilities, again.probabilities)
    with pytest.raises(ValueError):
        predict(params, np.zeros(67))


def test_predict_argmax_tie_lowest():
    params = init_params(np.random.default_rng(0))
    params.tensors["dense3.W"][...] = 0
    params.tensors["dense3.b"][...] = 0
    assert predict(params, np.ones(68)).label == 0
