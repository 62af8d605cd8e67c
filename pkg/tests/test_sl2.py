import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from origami_lab import sl2
from origami_lab.errors import BadInput, BudgetExceeded

from conftest import random_sl2


@st.composite
def matrices(draw, bound=10**6):
    """Random SL2(Z) matrix with first column (a, c) coprime."""
    a = draw(st.integers(-bound, bound))
    c = draw(st.integers(-bound, bound))
    if math.gcd(a, c) != 1:
        a, c = 1, c
    g, u, v = _egcd(a, c)
    # a u + c v = g = +-1
    return (a, -v * g, c, u * g)


def _egcd(x, y):
    if y == 0:
        return (x, 1, 0) if x >= 0 else (-x, -1, 0)
    g, u, v = _egcd(y, x % y)
    return g, v, u - (x // y) * v


def test_operator_norm_examples():
    assert sl2.operator_norm(sl2.IDENTITY) == 1.0
    assert sl2.operator_norm((1, 1, 0, 1)) == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)
    g = (2, 1, 1, 1)
    top = np.linalg.eigvalsh(np.array([[2, 1], [1, 1]]).T @ np.array([[2, 1], [1, 1]]))[-1]
    assert sl2.operator_norm(g) == pytest.approx(math.sqrt(top), abs=1e-12)
    assert sl2.operator_norm(g) == pytest.approx((3 + math.sqrt(5)) / 2, abs=1e-12)


@given(matrices(1000))
def test_norm_invariances(g):
    n = sl2.operator_norm(g)
    assert n >= 1
    assert abs(n - sl2.operator_norm(sl2.inv(g))) < 1e-12 * n
    assert abs(n - sl2.operator_norm(sl2.transpose(g))) < 1e-12 * n
    assert abs(n - np.linalg.norm(np.array(g, dtype=float).reshape(2, 2), 2)) < 1e-9 * n


def test_submultiplicativity(rng):
    gs = random_sl2(rng, 12, 2000)
    hs = random_sl2(rng, 12, 2000)
    for g, h in zip(gs, hs):
        assert sl2.operator_norm(sl2.mul(g, h)) <= sl2.operator_norm(g) * sl2.operator_norm(h) * (1 + 1e-12)


def test_decompose_word_examples():
    assert sl2.decompose_word((1, 1, 0, 1)) == ("T",)
    assert sl2.decompose_word((2, 1, 1, 1)) == ("T", "L")
    assert sl2.decompose_word(sl2.MINUS_I) == ("-I",)
    assert sl2.word_product(()) == sl2.IDENTITY


@given(matrices())
def test_decompose_word_round_trip(g):
    assert sl2.det(g) == 1
    assert sl2.word_product(sl2.decompose_word(g)) == g


def test_decompose_word_many(rng):
    for g in random_sl2(rng, 40, 10_000):
        assert sl2.word_product(sl2.decompose_word(g)) == g


def test_group_element_validation():
    with pytest.raises(BadInput):
        sl2.GroupElement((2, 0, 0, 1))
    with pytest.raises(BadInput):
        sl2.GroupElement((1, 1, 0, 1), ("L",))
    assert sl2.GroupElement((2, 1, 1, 1), ("T", "L")).norm > 2.6


def test_generator_set_rules():
    with pytest.raises(BadInput):
        sl2.GeneratorSet.from_matrices([sl2.IDENTITY])
    with pytest.raises(BadInput):
        sl2.GeneratorSet.from_matrices([(1, 1, 0, 1), (1, 1, 0, 1)])
    gs = sl2.parse_generators("# convex_cocompact\n2,1,1,1\n")
    assert gs.claimed_convex_cocompact
    assert sl2.parse_generators(sl2.format_generators(gs)) == gs


def test_ball_by_word_length():
    ball = sl2.enumerate_ball(sl2.sl2z(), max_length=1)
    assert set(ball.elements) == {sl2.IDENTITY, (1, 1, 0, 1), (1, -1, 0, 1), (1, 0, 1, 1), (1, 0, -1, 1)}


def test_parabolic_ball_is_odd():
    gens = sl2.GeneratorSet.from_matrices([(1, 1, 0, 1)])
    for cap in (3.0, 10.0, 57.5):
        ball = sl2.enumerate_ball(gens, norm_cap=cap)
        assert len(ball) % 2 == 1
        assert all(g[0] == 1 and g[2] == 0 and g[3] == 1 for g in ball.elements)


def test_ball_matches_brute_force():
    ball = sl2.enumerate_ball(sl2.sl2z(), norm_cap=10)
    brute = sl2.brute_force_norm_ball(10)
    assert set(ball.elements) == brute
    assert not ball.truncated
    for k, g in enumerate(ball.elements):
        assert sl2.word_product(sl2.decompose_word(g)) == g
        prod = sl2.IDENTITY
        for h in ball.word(k):
            prod = sl2.mul(prod, h)
        assert prod == g


def test_ball_is_deterministic():
    a = sl2.enumerate_ball(sl2.sl2z(), norm_cap=20)
    b = sl2.enumerate_ball(sl2.sl2z(), norm_cap=20)
    assert a.elements == b.elements and a.parent == b.parent


def test_ball_budget():
    with pytest.raises(BudgetExceeded):
        sl2.enumerate_ball(sl2.sl2z(), norm_cap=100, budget=1000)
