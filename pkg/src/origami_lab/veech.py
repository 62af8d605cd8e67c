"""Veech groups of origamis through the SL2(Z) orbit graph."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import sl2
from .errors import BudgetExceeded, NotReduced
from .origami import (
    Origami,
    canonical_form,
    format_cycles,
    is_reduced,
    perm_compose,
    perm_inverse,
)
from .sl2 import GroupElement, Matrix


def generator_action(letter: str, o: Origami) -> Origami:
    """Origami of the sheared and re-tiled surface.

    For ``T`` the sheared square ``i`` is cut along its diagonal and the new
    unit square ``i`` is formed by its lower-right half together with the
    upper-left half of the parallelogram to its left.  Right gluings are
    unchanged and the top of new square ``i`` meets the bottom of
    ``tau(sigma^-1(i))``.  ``L`` is the same construction with the axes
    exchanged; ``-I`` rotates every square by a half turn.
    """
    s, t = o.sigma, o.tau
    if letter == "T":
        return Origami(s, perm_compose(t, perm_inverse(s)))
    if letter == "t":
        return Origami(s, perm_compose(t, s))
    if letter == "L":
        return Origami(perm_compose(s, perm_inverse(t)), t)
    if letter == "l":
        return Origami(perm_compose(s, t), t)
    if letter == "-I":
        return Origami(perm_inverse(s), perm_inverse(t))
    raise ValueError(f"unknown letter {letter!r}")


def act(word, o: Origami) -> Origami:
    """``g . o`` for ``g`` the product of ``word``; the rightmost letter acts first."""
    for letter in reversed(word):
        o = generator_action(letter, o)
    return o


@dataclass
class OrbitGraph:
    nodes: list[Origami]  # canonical forms; node 0 is the basepoint
    edges: dict[str, list[int]]  # letter -> target node per source node
    tree_words: list[tuple[str, ...]]  # g_v with g_v . base = node v
    tree_edges: set[tuple[int, str]] = field(default_factory=set)
    basepoint: int = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def step(self, node: int, letter: str) -> int:
        return self.edges[letter][node]

    def walk(self, word, node: int | None = None) -> int:
        node = self.basepoint if node is None else node
        for letter in reversed(word):
            node = self.edges[letter][node]
        return node

    def edge_rows(self) -> list[tuple[int, str, int]]:
        return [(v, x, self.edges[x][v]) for x in ("T", "L") for v in range(len(self.nodes))]


@dataclass
class VeechResult:
    generators: list[GroupElement]
    index: int  # in SL2(Z)
    projective_index: int  # of the image in PSL2(Z)
    contains_minus_identity: bool
    schreier_count: int  # non-tree edges, trivial generators included
    convention: str = "matrix"

    @property
    def reported_index(self) -> int:
        return self.index if self.convention == "matrix" else self.projective_index


def orbit_graph(o: Origami, budget: int = 100_000) -> OrbitGraph:
    base = canonical_form(o).origami
    nodes = [base]
    index = {(base.sigma, base.tau): 0}
    edges: dict[str, list[int]] = {"T": [], "L": []}
    words: list[tuple[str, ...]] = [()]
    tree: set[tuple[int, str]] = set()
    v = 0
    while v < len(nodes):
        for letter in ("T", "L"):
            img = canonical_form(generator_action(letter, nodes[v])).origami
            key = (img.sigma, img.tau)
            u = index.get(key)
            if u is None:
                u = len(nodes)
                if u >= budget:
                    raise BudgetExceeded(f"orbit larger than {budget}")
                index[key] = u
                nodes.append(img)
                words.append((letter,) + words[v])
                tree.add((v, letter))
            edges[letter].append(u)
        v += 1
    n = len(nodes)
    for letter, inv in (("T", "t"), ("L", "l")):
        back = [0] * n
        for src, dst in enumerate(edges[letter]):
            back[dst] = src
        edges[inv] = back
    edges["-I"] = [index[_key(canonical_form(generator_action("-I", x)).origami)] for x in nodes]
    return OrbitGraph(nodes, edges, words, tree)


def _key(o: Origami):
    return (o.sigma, o.tau)


def veech_generators(
    o: Origami,
    budget: int = 100_000,
    require_reduced: bool = True,
    length_cap: float = 6.0,
    convention: str = "matrix",
) -> tuple[VeechResult, OrbitGraph]:
    """Stabiliser of ``o`` in SL2(Z) by Schreier's lemma.

    Every non-tree edge ``v --X--> u`` contributes ``g_u^-1 X g_v``.  There are
    ``|E| - |V| + 1`` of them; identities and repeats are dropped from the
    returned list but counted in ``schreier_count``.
    """
    if require_reduced and not is_reduced(o, length_cap).reduced:
        raise NotReduced("Veech group computation needs a reduced origami")
    graph = orbit_graph(o, budget)
    gens: list[GroupElement] = []
    seen: set[Matrix] = set()
    count = 0
    for v in range(len(graph)):
        for letter in ("T", "L"):
            if (v, letter) in graph.tree_edges:
                continue
            count += 1
            u = graph.edges[letter][v]
            word = sl2.invert_word(graph.tree_words[u]) + (letter,) + graph.tree_words[v]
            m = sl2.word_product(word)
            if m == sl2.IDENTITY or m in seen:
                continue
            seen.add(m)
            gens.append(GroupElement(m, _free_reduce(word)))
    minus = graph.edges["-I"][graph.basepoint] == graph.basepoint
    n = len(graph)
    res = VeechResult(gens, n, n if minus else n // 2, minus, count, convention)
    return res, graph


def _free_reduce(word):
    out: list[str] = []
    for x in word:
        if out and out[-1] == sl2.INVERSE_LETTER[x] and x != "-I":
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def is_member(g: Matrix, graph: OrbitGraph, convention: str = "matrix") -> bool:
    node = graph.walk(sl2.decompose_word(g))
    if node == graph.basepoint:
        return True
    if convention == "projective":
        return graph.edges["-I"][node] == graph.basepoint
    return False


def format_veech_csv(res: VeechResult) -> str:
    lines = [f"index={res.reported_index} convention={res.convention}", "a,b,c,d,word"]
    for g in res.generators:
        lines.append(",".join(str(x) for x in g.matrix) + "," + " ".join(g.word or ()))
    return "\n".join(lines) + "\n"


def format_orbit_graph(graph: OrbitGraph) -> tuple[str, str]:
    """Node list (one origami per line, ``sigma;tau``) and edge CSV."""
    nodes = "\n".join(
        f"{k} {format_cycles(o.sigma)};{format_cycles(o.tau)}" for k, o in enumerate(graph.nodes)
    ) + "\n"
    edges = "node,letter,node\n" + "".join(f"{a},{x},{b}\n" for a, x, b in graph.edge_rows())
    return nodes, edges
