import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from synth import synth_rows, write_corpus  # noqa: E402

GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def synth_csv(tmp_path_factory) -> Path:
    return write_corpus(tmp_path_factory.mktemp("corpus") / "urls.csv", 3000, seed=11)


@pytest.fixture(scope="session")
def trained_model(synth_csv, tmp_path_factory):
    """Small model trained on the synthetic corpus; returns (params, model_path, split, data)."""
    from siren.dataset import load_csv, stratified_split, vectorize
    from siren.nn import TrainConfig, save_model, train

    corpus = load_csv(synth_csv)
    data = vectorize(list(corpus.records))
    split = stratified_split(data.labels, seed=5)
    res = train(data.X[split.train], data.Y[split.train], data.X[split.validation], data.Y[split.validation],
                TrainConfig(max_epochs=6, patience=3, seed=5))
    path = tmp_path_factory.mktemp("model") / "model.bin"
    save_model(res.params, path)
    return res.params, path, split, data


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


__all__ = ["synth_rows"]
