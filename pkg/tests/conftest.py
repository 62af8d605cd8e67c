import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from origami_lab import sl2
from origami_lab.origami import l_origami, torus
from origami_lab.veech import veech_generators

settings.register_profile("lab", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


@pytest.fixture(scope="session")
def torus_origami():
    return torus()


@pytest.fixture(scope="session")
def l3():
    return l_origami()


@pytest.fixture(scope="session")
def l3_veech(l3):
    return veech_generators(l3)


@pytest.fixture(scope="session")
def l3_group(l3_veech):
    res, _ = l3_veech
    return sl2.GeneratorSet.from_matrices([g.matrix for g in res.generators])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_sl2(rng, bound, size):
    """Random SL2(Z) matrices as products of random letters."""
    out = []
    letters = ["T", "t", "L", "l"]
    while len(out) < size:
        word = [letters[k] for k in rng.integers(4, size=int(rng.integers(1, bound)))]
        out.append(sl2.word_product(word))
    return out


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
