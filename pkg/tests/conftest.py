import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addoption("--full", action="store_true", default=False,
                     help="run the full-scale (long) experiment checks")


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "full: full-scale experiment reproduction (opt-in via --full)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--full"):
        return
    skip = pytest.mark.skip(reason="full-scale check; run with --full")
    for item in items:
        if "full" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_mesh(rng, n, t_end=1.0, ratio_lo=0.1, ratio_hi=10.0, spread=30.0):
    """Random nonuniform mesh with consecutive step ratios in [ratio_lo, ratio_hi].

    The log step sizes follow a reflected walk bounded to a total spread of
    ``spread``, keeping the mesh inside the double-precision envelope the
    kernel closed forms are specified for (reflection preserves the ratio
    bound since the reflected jump is never longer than the proposal).
    """
    bound = 0.5 * np.log(spread)
    w = np.empty(n)
    w[0] = rng.uniform(-bound, bound)
    for k in range(1, n):
        step = rng.uniform(-np.log(ratio_hi), -np.log(ratio_lo))
        x = w[k - 1] + step
        if x > bound:
            x = 2 * bound - x
        elif x < -bound:
            x = -2 * bound - x
        w[k] = x
    taus = np.exp(w)
    taus *= t_end / taus.sum()
    levels = np.concatenate([[0.0], np.cumsum(taus)])
    levels[-1] = t_end
    from tfmbe import TimeMesh
    return TimeMesh(levels)
