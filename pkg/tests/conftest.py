import numpy as np
import pytest

from dwellcert import cli


def _load(name):
    return cli.load_system(name)[0]


@pytest.fixture(scope="session")
def ex1():
    return _load("ex1")


@pytest.fixture(scope="session")
def ex2():
    return _load("ex2")


@pytest.fixture(scope="session")
def ex3():
    return _load("ex3")


@pytest.fixture(scope="session")
def ex4():
    return _load("ex4")


@pytest.fixture(scope="session")
def ex5():
    return _load("ex5")


def taylor_expm(m, t, terms=200):
    """Truncated power series at a scaled argument, squared back up."""
    a = np.asarray(m, dtype=float) * t
    s = max(0, int(np.ceil(np.log2(max(np.abs(a).sum(axis=0).max(), 1.0)))) + 2)
    a = a / 2.0**s
    out = np.eye(len(a))
    term = np.eye(len(a))
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out

