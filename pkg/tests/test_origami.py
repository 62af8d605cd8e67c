import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from origami_lab.errors import Disconnected, NotAPermutation, BadInput
from origami_lab.origami import (
    Origami,
    canonical_form,
    corner_permutation,
    format_cycles,
    is_reduced,
    isomorphisms,
    lattice_basis,
    lattice_index,
    parse_cycles,
    parse_origami,
    perm_compose,
    perm_inverse,
    random_origami,
    relabel,
    saddle_connections,
    stratum,
    validate,
)


def origamis(max_degree=6):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_degree))
        s = draw(st.permutations(range(n)))
        t = draw(st.permutations(range(n)))
        o = Origami(tuple(s), tuple(t))
        from origami_lab.origami import orbit_of_first

        if len(orbit_of_first(o.sigma, o.tau)) != n:
            # make it connected by gluing everything into one sigma-cycle
            o = Origami(tuple((i + 1) % n for i in range(n)), tuple(t))
        return o

    return build()


def test_validate_examples():
    assert validate(1, "()", "()").degree == 1
    o = validate(3, "(1 2)", "(1 3)")
    assert o.sigma == (1, 0, 2) and o.tau == (2, 1, 0)
    with pytest.raises(Disconnected):
        validate(2, "()", "()")


def test_validate_rejects_bad_permutations():
    with pytest.raises(NotAPermutation):
        validate(3, "(1 2 2)", "()")
    with pytest.raises(NotAPermutation):
        validate(2, "(1 3)", "()")
    with pytest.raises(BadInput):
        parse_origami("sigma (1 2)\ntau ()\n")


def test_cycle_notation_round_trip():
    p = parse_cycles("(1 3 2)(4 5)", 6)
    assert format_cycles(p) == "(1 3 2)(4 5)"
    assert format_cycles(tuple(range(4))) == "()"


def test_l_origami_orbit_is_everything():
    # explicit orbit of square 1 under <sigma, tau>: 1 -> 2 via sigma, 1 -> 3 via tau
    o = validate(3, "(1 2)", "(1 3)")
    assert o.sigma[0] == 1 and o.tau[0] == 2


def test_stratum_examples(torus_origami, l3):
    st0 = stratum(torus_origami)
    assert st0.cone_angles == () and st0.genus == 1
    st1 = stratum(l3)
    assert st1.cone_angles == (3,) and st1.genus == 2
    st2 = stratum(validate(2, "(1 2)", "(1 2)"))
    # V - E + F = V - 2N + N with V = 2 regular vertices: torus
    assert st2.genus == 1 and st2.cone_angles == () and st2.vertices == 2


def test_corner_permutation_on_l_origami(l3):
    # one vertex: all three bottom-left corners are identified
    assert sorted(corner_permutation(l3)) == [0, 1, 2]
    assert corner_permutation(l3) != (0, 1, 2)


@given(origamis(7))
def test_gauss_bonnet(o):
    st_ = stratum(o)
    assert sum(k - 1 for k in st_.cone_angles) == 2 * st_.genus - 2


@given(origamis(6), st.randoms())
def test_canonical_form_relabel_invariant(o, r):
    rho = list(range(o.degree))
    r.shuffle(rho)
    assert canonical_form(relabel(o, rho)) == canonical_form(o)


@given(origamis(6))
def test_serialisation_round_trip(o):
    assert parse_origami(str(o)) == o


def test_canonical_form_separates_non_isomorphic_degree_four():
    # brute force over all 4! relabellings decides isomorphism independently
    rng = np.random.default_rng(3)
    samples = [random_origami(4, rng) for _ in range(25)]
    for a, b in itertools.combinations(samples, 2):
        brute = any(relabel(a, rho) == b for rho in itertools.permutations(range(4)))
        assert (canonical_form(a) == canonical_form(b)) == brute
        assert bool(isomorphisms(a, b)) == brute


def test_canonical_form_torus_and_permuted_l(torus_origami, l3):
    assert canonical_form(torus_origami).origami == torus_origami
    assert canonical_form(relabel(l3, (1, 2, 0))) == canonical_form(l3)


def test_lattice_helpers():
    assert lattice_basis([(2, 0), (0, 2), (1, 1)]) == ((1, 1), (0, 2))
    assert lattice_index(lattice_basis([(1, 0), (0, 1)])) == 1
    assert lattice_index(lattice_basis([(2, 0), (0, 3), (4, 3)])) == 6


def test_reducedness_examples(torus_origami, l3):
    res = is_reduced(l3, 4.0)
    assert res.reduced and res.method == "saddle_connections"
    hol = set(saddle_connections(l3, 4.0))
    # a single vertex: horizontal saddle connections of length 1, vertical of length 1, diagonal (1,1)
    assert {(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1)} <= hol
    assert is_reduced(torus_origami).reduced
    two = is_reduced(validate(2, "(1 2)", "(1 2)"))
    assert not two.reduced and lattice_index(two.basis) == 2


def test_reducedness_on_random_origamis_matches_certificate():
    from origami_lab.origami import period_lattice

    rng = np.random.default_rng(11)
    for _ in range(30):
        o = random_origami(int(rng.integers(2, 6)), rng)
        res = is_reduced(o, 6.0)
        assert res.reduced == (lattice_index(period_lattice(o)) == 1)


def test_perm_helpers():
    p = (1, 2, 0)
    assert perm_compose(p, perm_inverse(p)) == (0, 1, 2)
