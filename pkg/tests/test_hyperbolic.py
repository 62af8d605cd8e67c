import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from origami_lab import hyperbolic as hy
from origami_lab import sl2
from origami_lab.errors import BadInput, EmptyShell, InsufficientGrowth

from conftest import random_sl2

points = st.builds(
    hy.HyperbolicPoint,
    st.fractions(min_value=-5, max_value=5, max_denominator=50),
    st.fractions(min_value="1/10", max_value=5, max_denominator=50),
)


def test_point_validation_and_parsing():
    with pytest.raises(BadInput):
        hy.HyperbolicPoint(0, 0)
    assert hy.parse_point("1,2") == hy.HyperbolicPoint(1, 2)
    assert hy.parse_point("1+2i") == hy.HyperbolicPoint(1, 2)
    assert hy.parse_point("i") == hy.I


def test_displacement_examples():
    assert hy.displacement(sl2.IDENTITY, hy.HyperbolicPoint(3, 7)) == 0.0
    d = hy.displacement((1, 1, 0, 1))
    assert d == pytest.approx(math.acosh(1.5), abs=1e-12)
    assert d == pytest.approx(2 * math.log((1 + math.sqrt(5)) / 2), abs=1e-12)


def test_displacement_identity_at_i(rng):
    mats = random_sl2(rng, 21, 1000)
    exact = np.array([hy.displacement(g) for g in mats])
    vec = hy.displacements(np.array(mats))
    two_log = np.array([2 * sl2.log_norm(g) for g in mats])
    assert np.max(np.abs(exact - two_log)) < 1e-9
    assert np.max(np.abs(vec - two_log)) < 1e-9


@given(points, points, st.integers(0, 10**6))
def test_isometry(z, w, seed):
    g = random_sl2(np.random.default_rng(seed), 8, 1)[0]
    assert abs(hy.distance(hy.mobius(g, z), hy.mobius(g, w)) - hy.distance(z, w)) < 1e-10


@given(points, st.integers(0, 10**6))
def test_vectorised_displacement_matches_exact(z, seed):
    mats = random_sl2(np.random.default_rng(seed), 10, 5)
    vec = hy.displacements(np.array(mats), z)
    for g, v in zip(mats, vec):
        assert abs(hy.displacement(g, z) - v) < 1e-8 * max(1.0, v)


def test_shell_examples():
    sh = hy.build_shells(sl2.sl2z(), 3, 2.0)
    assert sh.size > 0
    assert np.all(sh.norms() <= math.exp(3) * (1 + 1e-12))
    disp = sh.displacements()
    assert np.all((disp > 4 - 1e-9) & (disp <= 6 + 1e-9))
    assert sh.weights.sum() == pytest.approx(1.0)


def test_parabolic_shell():
    gens = sl2.GeneratorSet.from_matrices([(1, 1, 0, 1)])
    n = 3
    sh = hy.build_shells(gens, n, 2.0)
    assert sh.size > 0
    for a, b, c, d in sh.elements.tolist():
        assert (a, c, d) == (1, 0, 1)
        dist = 2 * sl2.log_norm((a, b, c, d))
        assert 2 * n - 2 < dist <= 2 * n + 1e-9


def test_empty_shell():
    gens = sl2.GeneratorSet.from_matrices([(2, 1, 1, 1)])
    with pytest.raises(EmptyShell):
        hy.shell(gens, 3.0, 0.5)  # powers have displacement 1.925 k
    with pytest.raises(BadInput):
        hy.shell(gens, 10.0, 0.0)


def test_shell_growth_tends_to_delta():
    gens = sl2.sl2z()
    # n = 3..6: the ball of displacement 12 already has about a million elements
    ball = hy.ball_for_radius(gens, 12)
    est = hy.estimate_delta(gens, 12, second_basepoint=None, ball=ball)
    gaps = []
    for n in range(3, 7):
        size = hy.build_shells(gens, n, 2.0, ball=ball).size
        gaps.append(abs(math.log(size) / (2 * n) - est.slope))
    # the ratio approaches the slope (from above, because of the constant in the count)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.15


def test_delta_cyclic_and_insufficient_growth():
    cyc = sl2.GeneratorSet.from_matrices([(2, 1, 1, 1)])
    est = hy.estimate_delta(cyc, 40)
    assert 0 <= est.slope <= 0.05
    with pytest.raises(InsufficientGrowth):
        hy.estimate_delta(cyc, 2, min_points=10)


def test_counts_csv_and_shell_csv():
    gens = sl2.sl2z()
    est = hy.estimate_delta(gens, 6, second_basepoint=None)
    text = hy.format_counts_csv(est)
    assert text.splitlines()[0] == "R,count"
    sh = hy.build_shells(gens, 2, 2.0)
    lines = hy.format_shell_csv(sh, gens.symmetric()).splitlines()
    assert lines[0] == f"n=4 kappa=2 size={sh.size}"
    assert lines[1] == "a,b,c,d,norm,word"
    for row in lines[2:]:
        a, b, c, d, _, word = row.split(",")
        letters = word.split()
        assert sl2.word_product(letters) == (int(a), int(b), int(c), int(d))
