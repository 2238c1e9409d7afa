import time

import numpy as np

from gradcheck import gradient_check
from siren.nn.model import init_params


def test_gradient_check_every_tensor():
    start = time.perf_counter()
    report = gradient_check(seed=0)
    assert time.perf_counter() - start < 60
    assert set(report) == set(init_params(np.random.default_rng(0)).trainable)
    for name, r in report.items():
        assert r["entry_rel_err"] < 1e-4, (name, r)
        assert r["direction_rel_err"] < 1e-4, (name, r)


def test_gradient_check_other_seed():
    for name, r in gradient_check(seed=7, batch=16).items():
        assert r["entry_rel_err"] < 1e-4 and r["direction_rel_err"] < 1e-4, (name, r)
