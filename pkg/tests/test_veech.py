import numpy as np
import pytest
from hypothesis import given, strategies as st

from origami_lab import sl2
from origami_lab.errors import BudgetExceeded, NotReduced
from origami_lab.origami import canonical_form, random_origami, stratum, validate
from origami_lab.veech import (
    act,
    format_orbit_graph,
    format_veech_csv,
    generator_action,
    is_member,
    orbit_graph,
    veech_generators,
)

LETTERS = ["T", "t", "L", "l"]


def test_torus_is_fixed(torus_origami):
    for x in LETTERS + ["-I"]:
        assert generator_action(x, torus_origami) == torus_origami
    res, graph = veech_generators(torus_origami)
    assert res.index == 1 and len(graph) == 1
    assert is_member((1, 1, 0, 1), graph) and is_member((1, 0, 1, 1), graph)
    assert {g.matrix for g in res.generators} == {(1, 1, 0, 1), (1, 0, 1, 1)}


def test_l_origami_under_t(l3):
    # re-tiling the sheared L by hand: the new square 1 takes its top from the
    # sheared square 2, so 1 -> 2 -> 3 -> 1 vertically
    img = generator_action("T", l3)
    assert img == validate(3, "(1 2)", "(1 2 3)")
    assert canonical_form(img) != canonical_form(l3)


def test_l_origami_veech_group(l3, l3_veech):
    res, graph = l3_veech
    assert res.index == 3 and len(graph) == 3
    assert res.contains_minus_identity and res.projective_index == 3
    # Schreier count: |E| - |V| + 1 with two outgoing edges per node
    assert res.schreier_count == 2 * 3 - 3 + 1
    for g in res.generators:
        assert is_member(g.matrix, graph)
        assert canonical_form(act(g.word, l3)) == canonical_form(l3)
        assert sl2.word_product(g.word) == g.matrix
    assert is_member(sl2.IDENTITY, graph)
    t_fixes = canonical_form(generator_action("T", l3)) == canonical_form(l3)
    assert is_member((1, 1, 0, 1), graph) == t_fixes


def test_orbit_graph_edges_are_permutations(l3_veech):
    _, graph = l3_veech
    for x in ("T", "L"):
        assert sorted(graph.edges[x]) == list(range(len(graph)))
        for v in range(len(graph)):
            inv = {"T": "t", "L": "l"}[x]
            assert graph.step(graph.step(v, x), inv) == v


def test_orbit_stabiliser_consistency(l3, l3_veech):
    # index = number of cosets; each coset of the stabiliser meets the word ball
    res, graph = l3_veech
    ball = sl2.enumerate_ball(sl2.sl2z(), max_length=4)
    cosets = {graph.walk(sl2.decompose_word(g)) for g in ball.elements}
    assert len(cosets) == res.index
    direct = {canonical_form(act(sl2.decompose_word(g), l3)).key for g in ball.elements}
    assert len(direct) == res.index


@given(st.integers(2, 6), st.integers(0, 10**6), st.lists(st.sampled_from(LETTERS), max_size=6))
def test_word_then_inverse(n, seed, word):
    o = random_origami(n, np.random.default_rng(seed))
    back = act(sl2.invert_word(word), act(word, o))
    assert canonical_form(back) == canonical_form(o)
    assert stratum(act(word, o)) == stratum(o)


def test_non_reduced_refused():
    with pytest.raises(NotReduced):
        veech_generators(validate(2, "(1 2)", "(1 2)"))


def test_budget():
    o = validate(5, "(1 2 3 4 5)", "(1 2)")
    with pytest.raises(BudgetExceeded):
        orbit_graph(o, budget=2)


def test_projective_convention(l3_veech):
    _, graph = l3_veech
    assert is_member(sl2.MINUS_I, graph, "matrix")
    assert is_member(sl2.MINUS_I, graph, "projective")


def test_dumps(l3_veech):
    res, graph = l3_veech
    text = format_veech_csv(res)
    assert text.splitlines()[:2] == ["index=3 convention=matrix", "a,b,c,d,word"]
    for row in text.splitlines()[2:]:
        a, b, c, d, word = row.split(",")
        assert sl2.word_product(word.split()) == (int(a), int(b), int(c), int(d))
    nodes, edges = format_orbit_graph(graph)
    assert len(nodes.splitlines()) == 3
    assert edges.splitlines()[0] == "node,letter,node" and len(edges.splitlines()) == 7
