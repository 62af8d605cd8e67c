"""Square-tiled surfaces encoded by a pair of permutations.

Squares are labelled ``0 .. N-1`` internally; the text format and any
user-facing cycle notation is 1-based.  ``sigma[i] = j`` means the right edge
of square ``i`` is glued to the left edge of square ``j``; ``tau[i] = j`` means
the top edge of ``i`` is glued to the bottom edge of ``j``.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import (
    BadInput,
    Disconnected,
    Inconclusive,
    InternalInconsistency,
    NotAPermutation,
)

Perm = tuple[int, ...]


# ---------------------------------------------------------------- permutations


def perm_inverse(p: Sequence[int]) -> Perm:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


def perm_compose(*perms: Sequence[int]) -> Perm:
    """Right-to-left composition: ``perm_compose(f, g)[i] == f[g[i]]``."""
    n = len(perms[0])
    out = list(range(n))
    for p in reversed(perms):
        out = [p[k] for k in out]
    return tuple(out)


def perm_cycles(p: Sequence[int]) -> list[tuple[int, ...]]:
    seen = [False] * len(p)
    cycles = []
    for start in range(len(p)):
        if seen[start]:
            continue
        cyc = []
        k = start
        while not seen[k]:
            seen[k] = True
            cyc.append(k)
            k = p[k]
        cycles.append(tuple(cyc))
    return cycles


_CYCLE_RE = re.compile(r"\(([^()]*)\)")


def parse_cycles(text: str, degree: int) -> Perm:
    """Parse 1-based disjoint cycle notation such as ``(1 2)(3 4)`` or ``()``."""
    text = text.strip()
    if _CYCLE_RE.sub("", text).strip(" ,"):
        raise NotAPermutation(f"cannot parse cycle notation {text!r}")
    image = list(range(degree))
    seen: set[int] = set()
    for body in _CYCLE_RE.findall(text):
        items = [tok for tok in re.split(r"[\s,]+", body.strip()) if tok]
        try:
            cyc = [int(tok) - 1 for tok in items]
        except ValueError as exc:
            raise NotAPermutation(f"non-integer symbol in {text!r}") from exc
        for k in cyc:
            if not 0 <= k < degree:
                raise NotAPermutation(f"symbol {k + 1} outside 1..{degree}")
            if k in seen:
                raise NotAPermutation(f"symbol {k + 1} repeated in {text!r}")
            seen.add(k)
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            image[a] = b
    return tuple(image)


def format_cycles(p: Sequence[int]) -> str:
    parts = [c for c in perm_cycles(p) if len(c) > 1]
    if not parts:
        return "()"
    return "".join("(" + " ".join(str(k + 1) for k in c) + ")" for c in parts)


def _as_perm(p, degree: int) -> Perm:
    if isinstance(p, str):
        return parse_cycles(p, degree)
    p = tuple(int(k) for k in p)
    if len(p) != degree or sorted(p) != list(range(degree)):
        raise NotAPermutation(f"{p!r} is not a permutation of 0..{degree - 1}")
    return p


# ---------------------------------------------------------------- the surface


@dataclass(frozen=True)
class Origami:
    sigma: Perm
    tau: Perm

    @property
    def degree(self) -> int:
        return len(self.sigma)

    def __str__(self) -> str:
        return f"N {self.degree}\nsigma {format_cycles(self.sigma)}\ntau {format_cycles(self.tau)}\n"


def orbit_of_first(sigma: Perm, tau: Perm) -> set[int]:
    seen = {0}
    stack = [0]
    while stack:
        x = stack.pop()
        for y in (sigma[x], tau[x]):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def validate(degree: int, sigma, tau) -> Origami:
    """Build an :class:`Origami`, checking bijectivity and connectedness.

    ``sigma`` and ``tau`` are 1-based cycle strings or 0-based image tuples.
    """
    if degree < 1:
        raise BadInput("degree must be positive")
    s = _as_perm(sigma, degree)
    t = _as_perm(tau, degree)
    if len(orbit_of_first(s, t)) != degree:
        raise Disconnected("the group generated by sigma and tau is not transitive")
    return Origami(s, t)


def torus() -> Origami:
    return Origami((0,), (0,))


def l_origami() -> Origami:
    """Three squares in an L: 1 and 2 side by side, 3 on top of 1."""
    return validate(3, "(1 2)", "(1 3)")


def parse_origami(text: str) -> Origami:
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        fields[key.lower()] = rest.strip()
    try:
        n = int(fields["n"])
        return validate(n, fields.get("sigma", "()") or "()", fields.get("tau", "()") or "()")
    except KeyError as exc:
        raise BadInput(f"origami file is missing field {exc}") from exc
    except ValueError as exc:
        raise BadInput(str(exc)) from exc


def read_origami(path) -> Origami:
    with open(path) as fh:
        return parse_origami(fh.read())


# ---------------------------------------------------------------- stratum


@dataclass(frozen=True)
class StratumData:
    cone_angles: tuple[int, ...]  # k_i with angle 2*pi*k_i, only k_i > 1
    genus: int
    vertices: int  # all vertices, regular ones included


def corner_permutation(o: Origami) -> Perm:
    """Walk counterclockwise around the bottom-left corner of each square.

    Starting in square ``i`` (whose bottom-left corner is the vertex), the
    quadrants visited counterclockwise are ``sigma^-1 i``, then
    ``tau^-1 sigma^-1 i``, then ``sigma tau^-1 sigma^-1 i`` and finally
    ``tau sigma tau^-1 sigma^-1 i``, whose bottom-left corner is the same vertex
    one full turn later.  Cycles therefore correspond to vertices and a cycle of
    length ``k`` is a cone point of angle ``2 pi k``.
    """
    si, ti = perm_inverse(o.sigma), perm_inverse(o.tau)
    return perm_compose(o.tau, o.sigma, ti, si)


def _vertex_count(o: Origami) -> int:
    # union-find over the 4N square corners: 0=BL 1=BR 2=TL 3=TR
    parent = list(range(4 * o.degree))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for i in range(o.degree):
        r, u = o.sigma[i], o.tau[i]
        union(4 * i + 1, 4 * r + 0)
        union(4 * i + 3, 4 * r + 2)
        union(4 * i + 2, 4 * u + 0)
        union(4 * i + 3, 4 * u + 1)
    return len({find(x) for x in range(4 * o.degree)})


def stratum(o: Origami) -> StratumData:
    cycles = perm_cycles(corner_permutation(o))
    angles = tuple(sorted((len(c) for c in cycles if len(c) > 1), reverse=True))
    vertices = _vertex_count(o)
    euler = vertices - 2 * o.degree + o.degree
    if euler % 2:
        raise InternalInconsistency(f"odd Euler characteristic {euler}")
    genus = (2 - euler) // 2
    if sum(k - 1 for k in angles) != 2 * genus - 2 or vertices != len(cycles):
        raise InternalInconsistency(
            f"Gauss-Bonnet failed: angles {angles}, genus {genus}, vertices {vertices}"
        )
    return StratumData(angles, genus, vertices)


def singular_vertices(o: Origami) -> list[tuple[int, ...]]:
    """Cycles of the corner permutation with more than one element.

    Each cycle lists the squares whose bottom-left corner is that cone point.
    """
    return [c for c in perm_cycles(corner_permutation(o)) if len(c) > 1]


def vertex_index(o: Origami) -> list[int]:
    """Map each square to the id of the vertex at its bottom-left corner."""
    out = [0] * o.degree
    for vid, cyc in enumerate(perm_cycles(corner_permutation(o))):
        for i in cyc:
            out[i] = vid
    return out


# ---------------------------------------------------------------- relabelling


@dataclass(frozen=True)
class CanonicalForm:
    origami: Origami
    relabel: Perm = field(compare=False)  # old label -> canonical label
    automorphisms: int = field(compare=False, default=1)

    @property
    def key(self) -> tuple[Perm, Perm]:
        return (self.origami.sigma, self.origami.tau)


def relabel(o: Origami, rho: Sequence[int]) -> Origami:
    """Rename square ``i`` to ``rho[i]``."""
    n = o.degree
    s = [0] * n
    t = [0] * n
    for i in range(n):
        s[rho[i]] = rho[o.sigma[i]]
        t[rho[i]] = rho[o.tau[i]]
    return Origami(tuple(s), tuple(t))


def _bfs_labels(o: Origami, start: int) -> list[int]:
    label = [-1] * o.degree
    label[start] = 0
    order = [start]
    for x in order:
        for y in (o.sigma[x], o.tau[x]):
            if label[y] < 0:
                label[y] = len(order)
                order.append(y)
    return label


def canonical_form(o: Origami) -> CanonicalForm:
    best = None
    count = 0
    for start in range(o.degree):
        label = _bfs_labels(o, start)
        cand = relabel(o, label)
        key = (cand.sigma, cand.tau)
        if best is None or key < best[0]:
            best = (key, cand, tuple(label))
            count = 1
        elif key == best[0]:
            count += 1
    return CanonicalForm(best[1], best[2], count)


def isomorphisms(src: Origami, dst: Origami) -> list[Perm]:
    """All bijections ``rho`` with ``relabel(src, rho) == dst``, sorted."""
    if src.degree != dst.degree:
        return []
    n = src.degree
    found = []
    for image0 in range(n):
        rho = [-1] * n
        rho[0] = image0
        stack = [0]
        ok = True
        while stack and ok:
            x = stack.pop()
            for ps, pd in ((src.sigma, dst.sigma), (src.tau, dst.tau)):
                y, want = ps[x], pd[rho[x]]
                if rho[y] < 0:
                    rho[y] = want
                    stack.append(y)
                elif rho[y] != want:
                    ok = False
                    break
        if ok and sorted(rho) == list(range(n)):
            found.append(tuple(rho))
    return sorted(found)


# ---------------------------------------------------------------- lattices


def lattice_basis(vectors: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    """Hermite basis ``((a, b), (0, d))`` of the lattice spanned by ``vectors``.

    Returns fewer rows when the span has rank below two.
    """
    rows = [list(v) for v in vectors if v != (0, 0) and tuple(v) != (0, 0)]
    basis: list[list[int]] = []
    # first column: gcd combination
    pivot = None
    rest = []
    for r in rows:
        if pivot is None:
            pivot = r
            continue
        # euclid on first coordinates of pivot and r
        a, b = pivot, r
        while b[0] != 0:
            q = a[0] // b[0]
            a, b = b, [a[0] - q * b[0], a[1] - q * b[1]]
        pivot = a
        rest.append(b)
    if pivot is None:
        return ()
    if pivot[0] == 0:
        # all first coordinates vanish
        d = 0
        for r in rows:
            d = math.gcd(d, r[1])
        return ((0, d),) if d else ()
    if pivot[0] < 0:
        pivot = [-pivot[0], -pivot[1]]
    d = 0
    for r in rest:
        d = math.gcd(d, r[1])
    if d:
        pivot[1] %= d
        basis = [tuple(pivot), (0, d)]
    else:
        basis = [tuple(pivot)]
    return tuple(tuple(b) for b in basis)


def lattice_index(basis) -> int:
    """Index in Z^2, or 0 when the lattice is not of full rank."""
    if len(basis) < 2:
        return 0
    return abs(basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0])


def period_lattice(o: Origami) -> tuple[tuple[int, int], ...]:
    """Exact period lattice from a spanning tree of the square adjacency graph.

    Absolute periods are the holonomies of the non-tree edges; when there are
    cone points the position differences between them are added (relative
    periods).  Used as an independent certificate next to the flow search.
    """
    pos: dict[int, tuple[int, int]] = {0: (0, 0)}
    order = [0]
    for x in order:
        for perm, step in ((o.sigma, (1, 0)), (o.tau, (0, 1))):
            y = perm[x]
            if y not in pos:
                pos[y] = (pos[x][0] + step[0], pos[x][1] + step[1])
                order.append(y)
    # tree edges contribute zero; every other edge is an absolute period
    periods = []
    for x in range(o.degree):
        for perm, step in ((o.sigma, (1, 0)), (o.tau, (0, 1))):
            y = perm[x]
            periods.append((pos[x][0] + step[0] - pos[y][0], pos[x][1] + step[1] - pos[y][1]))
    sing = [i for c in singular_vertices(o) for i in c]
    if sing:
        base = pos[sing[0]]
        periods += [(pos[i][0] - base[0], pos[i][1] - base[1]) for i in sing]
    return lattice_basis(periods)


# ---------------------------------------------------------------- reducedness


def _flow_segment(o: Origami, si: Perm, ti: Perm, bl: int, p: int, q: int) -> int:
    """Follow the segment of holonomy ``(p, q)`` leaving the bottom-left corner
    of square ``bl`` in the sheet of that square; return the bottom-left square
    representing the vertex it arrives at.
    """
    s, t = o.sigma, o.tau
    if q == 0:
        return s[bl] if p > 0 else si[bl]
    if p == 0:
        if q > 0:
            return t[bl]
        return s[ti[si[bl]]]
    if p > 0 and q > 0:
        cell = bl
    elif p < 0 < q:
        cell = si[bl]
    elif p < 0 and q < 0:
        cell = ti[si[bl]]
    else:
        cell = s[ti[si[bl]]]
    hstep = s if p > 0 else si
    vstep = t if q > 0 else ti
    ap, aq = abs(p), abs(q)
    j = k = 1  # next vertical crossing j/ap, next horizontal k/aq
    while j < ap or k < aq:
        if k >= aq or (j < ap and j * aq < k * ap):
            cell = hstep[cell]
            j += 1
        else:
            cell = vstep[cell]
            k += 1
    if p > 0 and q > 0:
        return t[s[cell]]
    if p < 0 < q:
        return t[cell]
    if p < 0 and q < 0:
        return cell
    return s[cell]


def saddle_connections(o: Origami, length_cap: float) -> list[tuple[int, int]]:
    """Holonomy vectors of saddle connections of length at most ``length_cap``.

    Straight-line flow from every outgoing prong at every cone point, in every
    primitive integer direction; a segment passing a regular vertex continues.
    """
    sing = singular_vertices(o)
    if not sing:
        return []
    vid = vertex_index(o)
    singular = {vid[c[0]] for c in sing}
    si, ti = perm_inverse(o.sigma), perm_inverse(o.tau)
    cap2 = length_cap * length_cap
    m = int(math.floor(length_cap))
    out = []
    for cyc in sing:
        for start in cyc:
            for p in range(-m, m + 1):
                for q in range(-m, m + 1):
                    if (p, q) == (0, 0) or math.gcd(p, q) != 1 or p * p + q * q > cap2:
                        continue
                    bl = start
                    steps = 0
                    while True:
                        steps += 1
                        if steps * steps * (p * p + q * q) > cap2:
                            break
                        bl = _flow_segment(o, si, ti, bl, p, q)
                        if vid[bl] in singular:
                            out.append((steps * p, steps * q))
                            break
    return out


@dataclass(frozen=True)
class ReducedResult:
    reduced: bool
    basis: tuple[tuple[int, int], ...]
    method: str  # "saddle_connections", "closed_curves" or "certificate"


def is_reduced(o: Origami, length_cap: float = 4.0) -> ReducedResult:
    """Decide whether the period lattice is all of Z^2.

    With cone points the saddle-connection holonomies up to ``length_cap`` are
    collected.  If they span Z^2 the surface is reduced.  Otherwise the exact
    period lattice decides: a proper sublattice proves non-reducedness, while a
    full lattice means the cap was too small (:class:`Inconclusive`).  Without
    cone points the period lattice is the lattice of closed-curve holonomies.
    """
    exact = period_lattice(o)
    if not singular_vertices(o):
        return ReducedResult(lattice_index(exact) == 1, exact, "closed_curves")
    found = lattice_basis(saddle_connections(o, length_cap))
    if lattice_index(found) == 1:
        return ReducedResult(True, found, "saddle_connections")
    if lattice_index(exact) != 1:
        return ReducedResult(False, exact, "certificate")
    raise Inconclusive(
        f"saddle connections up to length {length_cap} span {found}; retry with a larger cap"
    )


def random_origami(degree: int, rng) -> Origami:
    """Uniformly random pair of permutations, retried until connected."""
    while True:
        s = tuple(int(k) for k in rng.permutation(degree))
        t = tuple(int(k) for k in rng.permutation(degree))
        if len(orbit_of_first(s, t)) == degree:
            return Origami(s, t)
