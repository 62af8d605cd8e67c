"""Following points of an origami under its affine automorphisms.

Each letter acts by a shear of every square followed by the cut-and-paste of
:func:`origami_lab.veech.generator_action`; the final surface is identified
with the starting one by a relabelling of squares.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import sl2
from .errors import BadInput, NotInVeechGroup
from .origami import Origami, corner_permutation, isomorphisms, perm_inverse
from .sl2 import Matrix
from .veech import generator_action


@dataclass(frozen=True)
class SurfacePoint:
    square: int  # 0-based
    s: Fraction
    t: Fraction

    def __post_init__(self):
        object.__setattr__(self, "s", Fraction(self.s))
        object.__setattr__(self, "t", Fraction(self.t))
        if not (0 <= self.s < 1 and 0 <= self.t < 1):
            raise BadInput(f"coordinates ({self.s}, {self.t}) outside [0, 1)^2")

    def q(self) -> tuple[Fraction, Fraction]:
        """Image in the square torus under the covering map."""
        return (self.s, self.t)


def is_singular(o: Origami, p: SurfacePoint) -> bool:
    if p.s or p.t:
        return False
    c = corner_permutation(o)
    return c[p.square] != p.square


def apply_letter(letter: str, o: Origami, p: SurfacePoint) -> tuple[Origami, SurfacePoint]:
    sq, s, t = p.square, p.s, p.t
    if letter == "T":
        s += t
        if s >= 1:
            s -= 1
            sq = o.sigma[sq]
    elif letter == "t":
        s -= t
        if s < 0:
            s += 1
            sq = perm_inverse(o.sigma)[sq]
    elif letter == "L":
        t += s
        if t >= 1:
            t -= 1
            sq = o.tau[sq]
    elif letter == "l":
        t -= s
        if t < 0:
            t += 1
            sq = perm_inverse(o.tau)[sq]
    elif letter == "-I":
        new = generator_action("-I", o)
        if s == 0:
            sq = new.sigma[sq]
        else:
            s = 1 - s
        if t == 0:
            sq = new.tau[sq]
        else:
            t = 1 - t
        return new, SurfacePoint(sq, s, t)
    else:
        raise ValueError(f"unknown letter {letter!r}")
    return generator_action(letter, o), SurfacePoint(sq, s, t)


@dataclass
class AffineTrace:
    word: tuple[str, ...]
    steps: list[tuple[Origami, SurfacePoint]]  # after each letter, rightmost letter first
    relabel: tuple[int, ...]
    automorphisms: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "word": list(self.word),
                "steps": [
                    {
                        "sigma": [k + 1 for k in o.sigma],
                        "tau": [k + 1 for k in o.tau],
                        "point": [p.square + 1, str(p.s), str(p.t)],
                    }
                    for o, p in self.steps
                ],
                "relabel": [k + 1 for k in self.relabel],
                "automorphisms": self.automorphisms,
            },
            indent=1,
        )


def apply_element(g: Matrix, o: Origami, p: SurfacePoint) -> tuple[SurfacePoint, AffineTrace]:
    """Image of ``p`` under the affine automorphism with derivative ``g``.

    When ``o`` has nontrivial automorphisms the lexicographically least
    identification of the final surface with ``o`` is used; the count is
    kept in the trace.
    """
    word = sl2.decompose_word(g)
    cur = o
    steps = []
    for letter in reversed(word):
        cur, p = apply_letter(letter, cur, p)
        steps.append((cur, p))
    isos = isomorphisms(cur, o)
    if not isos:
        raise NotInVeechGroup(f"{g} does not stabilise the origami")
    rho = isos[0]
    out = SurfacePoint(rho[p.square], p.s, p.t)
    return out, AffineTrace(word, steps, rho, len(isos))


def linear_mod1(g: Matrix, s: Fraction, t: Fraction) -> tuple[Fraction, Fraction]:
    a, b, c, d = g
    return ((a * s + b * t) % 1, (c * s + d * t) % 1)


# ---------------------------------------------------------------- batches


class AffineMap:
    """Compiled action of one Veech element on integer-coordinate batches.

    Points are ``(square, S, T)`` with ``s = S / D``, ``t = T / D`` for a fixed
    common denominator ``D``; all arithmetic stays in integers.
    """

    def __init__(self, g: Matrix, o: Origami):
        self.matrix = g
        self.word = sl2.decompose_word(g)
        self.steps = []
        cur = o
        for letter in reversed(self.word):
            if letter == "-I":
                nxt = generator_action("-I", cur)
                perms = (np.array(nxt.sigma), np.array(nxt.tau))
            elif letter in "Tt":
                perms = np.array(cur.sigma if letter == "T" else perm_inverse(cur.sigma))
            else:
                perms = np.array(cur.tau if letter == "L" else perm_inverse(cur.tau))
            self.steps.append((letter, perms))
            cur = generator_action(letter, cur)
        isos = isomorphisms(cur, o)
        if not isos:
            raise NotInVeechGroup(f"{g} does not stabilise the origami")
        self.relabel = np.array(isos[0])
        self.automorphisms = len(isos)
        self.trivial = o.degree == 1

    def __call__(self, sq: np.ndarray, S: np.ndarray, T: np.ndarray, D: int):
        if self.trivial:
            a, b, c, d = self.matrix
            return sq.copy(), (a * S + b * T) % D, (c * S + d * T) % D
        sq, S, T = sq.copy(), S.copy(), T.copy()
        for letter, perm in self.steps:
            if letter == "T":
                S += T
                w = S >= D
                S[w] -= D
                sq[w] = perm[sq[w]]
            elif letter == "t":
                S -= T
                w = S < 0
                S[w] += D
                sq[w] = perm[sq[w]]
            elif letter == "L":
                T += S
                w = T >= D
                T[w] -= D
                sq[w] = perm[sq[w]]
            elif letter == "l":
                T -= S
                w = T < 0
                T[w] += D
                sq[w] = perm[sq[w]]
            else:
                sig, ta = perm
                w = S == 0
                sq[w] = sig[sq[w]]
                S[~w] = D - S[~w]
                w = T == 0
                sq[w] = ta[sq[w]]
                T[~w] = D - T[~w]
        return self.relabel[sq], S, T


@lru_cache(maxsize=4096)
def compiled(g: Matrix, o: Origami) -> AffineMap:
    return AffineMap(g, o)
