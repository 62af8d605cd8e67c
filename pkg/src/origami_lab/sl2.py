"""Exact integer 2x2 matrices of determinant one.

Words are tuples over the alphabet ``T, t, L, l, -I`` (lower case is the
inverse) and denote the left-to-right matrix product of their letters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import BadInput, BudgetExceeded

Matrix = tuple[int, int, int, int]  # (a, b, c, d) for [[a, b], [c, d]]

IDENTITY: Matrix = (1, 0, 0, 1)
MINUS_I: Matrix = (-1, 0, 0, -1)

LETTERS: dict[str, Matrix] = {
    "T": (1, 1, 0, 1),
    "t": (1, -1, 0, 1),
    "L": (1, 0, 1, 1),
    "l": (1, 0, -1, 1),
    "-I": MINUS_I,
}
INVERSE_LETTER = {"T": "t", "t": "T", "L": "l", "l": "L", "-I": "-I"}


def mul(g: Matrix, h: Matrix) -> Matrix:
    a, b, c, d = g
    e, f, k, m = h
    return (a * e + b * k, a * f + b * m, c * e + d * k, c * f + d * m)


def inv(g: Matrix) -> Matrix:
    a, b, c, d = g
    return (d, -b, -c, a)


def transpose(g: Matrix) -> Matrix:
    a, b, c, d = g
    return (a, c, b, d)


def det(g: Matrix) -> int:
    return g[0] * g[3] - g[1] * g[2]


def neg(g: Matrix) -> Matrix:
    return (-g[0], -g[1], -g[2], -g[3])


def word_product(word: Iterable[str]) -> Matrix:
    out = IDENTITY
    for letter in word:
        out = mul(out, LETTERS[letter])
    return out


def invert_word(word: Sequence[str]) -> tuple[str, ...]:
    return tuple(INVERSE_LETTER[x] for x in reversed(word))


def trace_sq(g: Matrix) -> int:
    """Squared Frobenius norm a^2 + b^2 + c^2 + d^2."""
    return g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]


def operator_norm(g: Matrix) -> float:
    """Largest singular value, from ``||g||^2 = (t + sqrt(t^2 - 4)) / 2``."""
    t = trace_sq(g)
    return math.sqrt((t + math.sqrt(t * t - 4)) / 2)


def log_norm(g: Matrix) -> float:
    t = trace_sq(g)
    return 0.5 * math.log((t + math.sqrt(t * t - 4)) / 2)


def norm_cap_to_trace(norm_cap: float) -> float:
    """``||g|| <= R`` iff ``a^2+b^2+c^2+d^2 <= R^2 + R^-2``."""
    r2 = norm_cap * norm_cap
    return r2 + 1.0 / r2


@dataclass(frozen=True)
class GroupElement:
    matrix: Matrix
    word: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if det(self.matrix) != 1:
            raise BadInput(f"{self.matrix} does not have determinant 1")
        if self.word is not None and word_product(self.word) != self.matrix:
            raise BadInput(f"word {self.word} does not multiply to {self.matrix}")

    @property
    def norm(self) -> float:
        return operator_norm(self.matrix)

    def displacement(self) -> float:
        """Hyperbolic displacement of the basepoint i."""
        return 2.0 * log_norm(self.matrix)


def decompose_word(g: Matrix) -> tuple[str, ...]:
    """Word in ``T, t, L, l, -I`` whose product is exactly ``g``.

    Euclid's algorithm on the first column, keeping the top entry nonzero so
    that the reduction always terminates in an upper triangular matrix.
    """
    if det(g) != 1:
        raise BadInput(f"{g} does not have determinant 1")
    m = g
    left: list[tuple[str, int]] = []  # multipliers applied on the left, in order

    def apply(letter: str, power: int):
        nonlocal m
        if power == 0:
            return
        m = mul((1, power, 0, 1) if letter == "T" else (1, 0, power, 1), m)
        left.append((letter, power))

    if m[0] == 0:
        apply("T", -1 if m[2] > 0 else 1)
    while m[2] != 0:
        a, c = m[0], m[2]
        if abs(a) > abs(c):
            q = int(a / c)  # truncation; keeps a - q*c with the sign of a
            if a - q * c == 0:
                q -= 1 if q > 0 else -1
            apply("T", -q)
        else:
            apply("L", -int(c / a))
    a, b = m[0], m[1]
    tail: list[str] = []
    if a == -1:
        tail.append("-I")
        b = -b
    tail += ["T"] * b if b > 0 else ["t"] * (-b)
    # g = X_1^-1 X_2^-1 ... X_k^-1 m where X_j were applied in order
    word: list[str] = []
    for letter, power in left:
        word += [letter if power < 0 else INVERSE_LETTER[letter]] * abs(power)
    return tuple(word + tail)


# ---------------------------------------------------------------- generator sets


@dataclass(frozen=True)
class GeneratorSet:
    generators: tuple[GroupElement, ...]
    claimed_convex_cocompact: bool = False

    def __post_init__(self):
        mats = [g.matrix for g in self.generators]
        if not mats:
            raise BadInput("empty generator set")
        if IDENTITY in mats:
            raise BadInput("identity is not allowed as a generator")
        if len(set(mats)) != len(mats):
            raise BadInput("generators must be pairwise distinct")

    @classmethod
    def from_matrices(cls, mats: Iterable[Matrix], claimed_convex_cocompact: bool = False):
        return cls(tuple(GroupElement(tuple(m)) for m in mats), claimed_convex_cocompact)

    def symmetric(self) -> list[Matrix]:
        """Generators followed by any inverses not already present."""
        out: list[Matrix] = []
        for g in self.generators:
            for h in (g.matrix, inv(g.matrix)):
                if h not in out:
                    out.append(h)
        return out


def sl2z() -> GeneratorSet:
    return GeneratorSet.from_matrices([LETTERS["T"], LETTERS["L"]])


def parse_generators(text: str) -> GeneratorSet:
    mats = []
    flag = False
    for raw in text.splitlines():
        line, _, comment = raw.partition("#")
        if "convex_cocompact" in comment.replace("-", "_"):
            flag = True
        line = line.strip()
        if not line:
            continue
        try:
            vals = tuple(int(x) for x in line.split(","))
        except ValueError as exc:
            raise BadInput(f"bad generator line {raw!r}") from exc
        if len(vals) != 4:
            raise BadInput(f"expected a,b,c,d in line {raw!r}")
        mats.append(vals)
    return GeneratorSet.from_matrices(mats, flag)


def read_generators(path) -> GeneratorSet:
    with open(path) as fh:
        return parse_generators(fh.read())


def format_generators(gens: GeneratorSet) -> str:
    lines = []
    if gens.claimed_convex_cocompact:
        lines.append("# convex_cocompact")
    lines += [",".join(str(x) for x in g.matrix) for g in gens.generators]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- balls


@dataclass
class Ball:
    """Result of a breadth-first enumeration.

    ``parent[k]`` and ``via[k]`` record how element ``k`` was reached:
    ``elements[k] = gens[via[k]] * elements[parent[k]]`` (``-1`` for the
    identity).  Words are rebuilt on demand from that tree, so each element
    carries a shortest witness in the symmetric generators.
    """

    elements: list[Matrix]
    parent: list[int]
    via: list[int]
    depth: list[int]
    gens: list[Matrix]
    explored_depth: int
    truncated: bool  # frontier still nonempty when exploration stopped
    norm_cap: float | None = None

    def __len__(self) -> int:
        return len(self.elements)

    def word_indices(self, k: int) -> list[int]:
        """Generator indices, leftmost first, whose product is ``elements[k]``."""
        out = []
        while self.parent[k] >= 0:
            out.append(self.via[k])
            k = self.parent[k]
        return out

    def word(self, k: int) -> tuple[Matrix, ...]:
        return tuple(self.gens[i] for i in self.word_indices(k))

    def norms(self):
        import numpy as np

        t = np.array([trace_sq(g) for g in self.elements], dtype=float)
        return np.sqrt((t + np.sqrt(t * t - 4.0)) / 2.0)

    def as_arrays(self):
        import numpy as np

        return np.array(self.elements, dtype=np.int64).reshape(-1, 4)


def enumerate_ball(
    gens: GeneratorSet,
    max_length: int | None = None,
    norm_cap: float | None = None,
    max_depth: int = 10_000,
    budget: int = 5_000_000,
) -> Ball:
    """Breadth-first products ``g_k ... g_1`` of symmetric generators.

    With ``max_length`` the ball of that word length is returned.  With
    ``norm_cap`` only elements of operator norm at most ``norm_cap`` are kept
    and expanded, and ``truncated`` reports whether the search stopped at
    ``max_depth`` with unexplored elements left.

    Pruning by norm is complete for {T, L} when ``norm_cap`` is at least the
    golden ratio: every other element of SL2(Z) is reached from a neighbour of
    strictly smaller Frobenius norm.  For other generator sets the result is
    the set of elements reachable through words staying below the cap.
    Raises :class:`BudgetExceeded` past ``budget`` elements.
    """
    if max_length is None and norm_cap is None:
        raise BadInput("give a word length or a norm cap")
    sym = gens.symmetric()
    depth_limit = max_depth if max_length is None else min(max_length, max_depth)
    keep_t = math.inf if norm_cap is None else norm_cap_to_trace(norm_cap) * (1 + 1e-12)

    index = {IDENTITY: 0}
    elements = [IDENTITY]
    parent = [-1]
    via = [-1]
    depth = [0]
    frontier = [0]
    level = 0
    while frontier and level < depth_limit:
        level += 1
        nxt = []
        for k in frontier:
            e, f, p, q = elements[k]
            for gi, (a, b, c, d) in enumerate(sym):
                x = (a * e + b * p, a * f + b * q, c * e + d * p, c * f + d * q)
                if x in index:
                    continue
                if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] > keep_t:
                    continue
                index[x] = len(elements)
                nxt.append(len(elements))
                elements.append(x)
                parent.append(k)
                via.append(gi)
                depth.append(level)
            if len(elements) > budget:
                raise BudgetExceeded(f"ball exceeded {budget} elements at depth {level}")
        frontier = nxt
    return Ball(elements, parent, via, depth, sym, level, bool(frontier), norm_cap)


def brute_force_norm_ball(norm_cap: float) -> set[Matrix]:
    """All of SL2(Z) with operator norm at most ``norm_cap`` by an entry sweep."""
    bound = int(math.floor(norm_cap))
    tcap = norm_cap_to_trace(norm_cap) * (1 + 1e-12)
    out = set()
    rng = range(-bound, bound + 1)
    for a in rng:
        for b in rng:
            for c in rng:
                for d in rng:
                    if a * d - b * c == 1 and a * a + b * b + c * c + d * d <= tcap:
                        out.add((a, b, c, d))
    return out
