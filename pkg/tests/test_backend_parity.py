"""The compiled kernels and the numpy fallback must agree bit for bit."""
import numpy as np
import pytest

from fairopt import backend
from fairopt.dynamics import optimizer_params
from fairopt.optimizers import Algorithm, OptimizerConfig
from fairopt.stats import SeededStream

pytestmark = pytest.mark.skipif("cython" not in backend.BACKENDS, reason="compiled extension not built")

PY = backend.get("python")


@pytest.fixture(scope="module")
def cy():
    return backend.get("cython")


@pytest.mark.parametrize("alg", list(Algorithm))
def test_warmup_paths(cy, alg):
    s = SeededStream(10)
    w0 = s.normal(17)
    u = s.uniform((17, 300))
    params = optimizer_params(OptimizerConfig(alg, eta=0.05))
    a = PY.warmup_paths(w0, u, 0.2, 1.0, -1.0, params, 3)
    b = cy.warmup_paths(w0, u, 0.2, 1.0, -1.0, params, 3)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_warmup_divergence(cy):
    u = SeededStream(0).uniform((3, 500))
    params = optimizer_params(OptimizerConfig(Algorithm.SGD, eta=10.0))
    a = PY.warmup_paths(np.full(3, 0.5), u, 0.1, 1.0, -1.0, params, 1)
    b = cy.warmup_paths(np.full(3, 0.5), u, 0.1, 1.0, -1.0, params, 1)
    assert np.array_equal(a[0], b[0], equal_nan=True) and np.array_equal(a[1], b[1])
    assert a[1].all()


def test_sgd_sde(cy):
    xi = SeededStream(1).normal((5, 1000))
    a = PY.sgd_sde_paths(np.zeros(5), xi, -0.8, 0.01, 0.019, 10)
    b = cy.sgd_sde_paths(np.zeros(5), xi, -0.8, 0.01, 0.019, 10)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("drift", [1.0, 0.5])
def test_rmsprop_sde(cy, drift):
    xi = SeededStream(2).normal((4, 800))
    args = (np.zeros(4), np.full(4, 3.0), xi, -0.8, 0.36, 1.0, 0.1, 0.5, 0.5, 0.05, 4, drift)
    a, b = PY.rmsprop_sde_paths(*args), cy.rmsprop_sde_paths(*args)
    for x, y in zip(a, b):
        assert np.all(np.isfinite(x))
        assert np.array_equal(x, y)
    assert a[2].sum() > 0  # the clipping branch was exercised


def test_signed_rank_counts(cy):
    ranks = np.array([2, 4, 5, 5, 8, 12, 14, 20, 22, 30], dtype=np.int64)
    assert np.array_equal(PY.signed_rank_null_counts(ranks), cy.signed_rank_null_counts(ranks))


def test_active_backend_prefers_compiled():
    import os

    if not os.environ.get("FAIROPT_BACKEND"):
        assert backend.NAME == "cython"
