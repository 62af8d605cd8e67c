"""Flat distance and target balls on an origami at scales below 1/2."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .affine import SurfacePoint
from .errors import CutoffTooLarge, RadiusTooLarge
from .origami import Origami, corner_permutation, perm_inverse, vertex_index

HALF = Fraction(1, 2)


def _corners(o: Origami, sq: int) -> list[tuple[int, int, int]]:
    """``(dx, dy, vertex id)`` of the four corners of square ``sq``."""
    vid = vertex_index(o)
    s, t = o.sigma, o.tau
    return [
        (0, 0, vid[sq]),
        (1, 0, vid[s[sq]]),
        (0, 1, vid[t[sq]]),
        (1, 1, vid[t[s[sq]]]),
    ]


def _cone_orders(o: Origami) -> list[int]:
    from .origami import perm_cycles

    cyc = perm_cycles(corner_permutation(o))
    order = [0] * o.degree
    vid = vertex_index(o)
    for c in cyc:
        order[vid[c[0]]] = len(c)
    return order


def _trace(o: Origami, sq: int, s: Fraction, t: Fraction, dx: Fraction, dy: Fraction):
    """Square reached by the straight segment ``(s, t) -> (s + dx, t + dy)``,
    or ``None`` when the segment runs through a vertex.  ``|dx|, |dy| < 1``.
    """
    cross_x = s + dx >= 1 or s + dx < 0
    cross_y = t + dy >= 1 or t + dy < 0
    hx = o.sigma if dx > 0 else perm_inverse(o.sigma)
    hy = o.tau if dy > 0 else perm_inverse(o.tau)
    if cross_x and cross_y:
        px = ((1 - s) if dx > 0 else s) / abs(dx)
        py = ((1 - t) if dy > 0 else t) / abs(dy)
        if px == py:
            return None
        if px < py:
            return hy[hx[sq]]
        return hx[hy[sq]]
    if cross_x:
        return hx[sq]
    if cross_y:
        return hy[sq]
    return sq


def distance(o: Origami, p: SurfacePoint, q: SurfacePoint, cutoff=HALF) -> float:
    """Flat distance when it is at most ``cutoff`` (at most 1/2), else ``inf``.

    Candidates are the straight segments to the nine nearest developed copies
    of ``q`` and the broken paths ``|p v| + |v q|`` through a shared corner
    vertex ``v``; at this scale a geodesic is one of these.
    """
    cutoff = Fraction(cutoff)
    if cutoff > HALF:
        raise CutoffTooLarge("cutoff must be at most 1/2")
    best2 = None
    for kx in (-1, 0, 1):
        for ky in (-1, 0, 1):
            dx = q.s + kx - p.s
            dy = q.t + ky - p.t
            d2 = dx * dx + dy * dy
            if d2 > cutoff * cutoff or (best2 is not None and d2 >= best2):
                continue
            if _trace(o, p.square, p.s, p.t, dx, dy) == q.square:
                best2 = d2
    best = math.inf if best2 is None else math.sqrt(best2)
    cp = _corners(o, p.square)
    cq = _corners(o, q.square)
    for ax, ay, v in cp:
        rp = math.hypot(p.s - ax, p.t - ay)
        for bx, by, w in cq:
            if w == v:
                best = min(best, rp + math.hypot(q.s - bx, q.t - by))
    return best if best <= cutoff else math.inf


def injectivity_bound(o: Origami, y: SurfacePoint) -> Fraction:
    """Half the distance to the nearest cone point (1/2 at most).

    Below this radius the ball about ``y`` is a flat disk, or a cone when
    ``y`` itself is the cone point.
    """
    order = _cone_orders(o)
    if y.s == 0 and y.t == 0:
        return HALF
    best = None
    for dx, dy, v in _corners(o, y.square):
        if order[v] > 1:
            d = math.hypot(y.s - dx, y.t - dy)
            best = d if best is None else min(best, d)
    if best is None:
        return HALF
    return min(HALF, Fraction(best / 2).limit_denominator(10**12))


def cone_order(o: Origami, y: SurfacePoint) -> int:
    if y.s or y.t:
        return 1
    return _cone_orders(o)[vertex_index(o)[y.square]]


def ball_measure(o: Origami, y: SurfacePoint, r) -> float:
    """Normalised area of ``B(y, r)``: ``k pi r^2 / N`` at a cone point of angle
    ``2 pi k`` and ``pi r^2 / N`` elsewhere."""
    if r < 0:
        raise RadiusTooLarge("radius must be non-negative")
    if r > injectivity_bound(o, y):
        raise RadiusTooLarge(f"radius {r} exceeds the injectivity bound at {y}")
    return cone_order(o, y) * math.pi * float(r) ** 2 / o.degree


@dataclass(frozen=True)
class TargetSpec:
    """Balls ``B(y, phi(||g||))`` with ``phi(x) = x^-alpha`` or a table."""

    center: SurfacePoint
    alpha: float | None = None
    table: tuple[tuple[float, float], ...] | None = None  # (norm, radius), increasing norms
    injectivity: Fraction = HALF

    def radius(self, norm):
        norm = np.asarray(norm, dtype=float)
        if self.alpha is not None:
            r = norm ** (-self.alpha)
        else:
            xs, ys = zip(*self.table)
            r = np.interp(norm, xs, ys)
        return np.minimum(r, float(self.injectivity))

    def radius_fn(self) -> Callable:
        return self.radius


def neighbourhood(o: Origami, y: SurfacePoint) -> np.ndarray:
    """Square index of the developed copy at offset ``(kx, ky)`` around ``y``'s
    square, as a 3x3 array indexed ``[kx + 1, ky + 1]``.  Diagonal cells go
    right/left first; near a cone point that choice is irrelevant below the
    injectivity bound.
    """
    s, t = o.sigma, o.tau
    si, ti = perm_inverse(s), perm_inverse(t)
    out = np.zeros((3, 3), dtype=np.int64)
    for kx in (-1, 0, 1):
        for ky in (-1, 0, 1):
            sq = y.square
            if kx:
                sq = (s if kx > 0 else si)[sq]
            if ky:
                sq = (t if ky > 0 else ti)[sq]
            out[kx + 1, ky + 1] = sq
    return out


def batch_distance_sq(o: Origami, y: SurfacePoint, sq, S, T, D: int) -> np.ndarray:
    """Squared distance (in units of ``1/D^2``) from each point to ``y``,
    valid below the injectivity bound at ``y``; larger values are only upper
    bounds of the true distance.

    ``y`` must have coordinates that are multiples of ``1/D``.
    """
    ys = y.s * D
    yt = y.t * D
    if ys.denominator != 1 or yt.denominator != 1:
        raise ValueError("target coordinates must be multiples of 1/D")
    ys, yt = int(ys), int(yt)
    nb = neighbourhood(o, y)
    best = np.full(np.shape(S), np.iinfo(np.int64).max, dtype=np.int64)
    for kx in (-1, 0, 1):
        for ky in (-1, 0, 1):
            cell = nb[kx + 1, ky + 1]
            m = sq == cell
            if not m.any():
                continue
            dx = S[m] + kx * D - ys
            dy = T[m] + ky * D - yt
            best[m] = np.minimum(best[m], dx * dx + dy * dy)
    return best
