"""Upper half-plane geometry, orbit counting and shells."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import sl2
from .errors import BadInput, EmptyShell, InsufficientGrowth
from .sl2 import Ball, GeneratorSet, Matrix

log = logging.getLogger(__name__)

GUARD = 1e-9


@dataclass(frozen=True)
class HyperbolicPoint:
    x: Fraction
    y: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", Fraction(self.x))
        object.__setattr__(self, "y", Fraction(self.y))
        if self.y <= 0:
            raise BadInput("imaginary part must be positive")

    def __str__(self) -> str:
        return f"{self.x}+{self.y}i"


I = HyperbolicPoint(0, 1)


def parse_point(text: str) -> HyperbolicPoint:
    """Parse ``x,y`` or ``x+yi`` style input, e.g. ``1,2`` or ``0,1``."""
    text = text.strip().replace(" ", "")
    if "," in text:
        x, y = text.split(",")
    elif text.endswith("i"):
        body = text[:-1]
        k = max(body.rfind("+"), body.rfind("-"))
        x, y = (body[:k], body[k:]) if k > 0 else ("0", body or "1")
    else:
        raise BadInput(f"cannot parse point {text!r}")
    return HyperbolicPoint(Fraction(x), Fraction(y))


def mobius(g: Matrix, z: HyperbolicPoint) -> HyperbolicPoint:
    a, b, c, d = g
    # (a z + b) / (c z + d) with z = x + i y
    den = (c * z.x + d) ** 2 + (c * z.y) ** 2
    re = ((a * z.x + b) * (c * z.x + d) + a * c * z.y * z.y) / den
    return HyperbolicPoint(re, z.y / den)


def cosh_distance(z: HyperbolicPoint, w: HyperbolicPoint) -> Fraction:
    return 1 + ((z.x - w.x) ** 2 + (z.y - w.y) ** 2) / (2 * z.y * w.y)


def _arccosh1p(u: float) -> float:
    # arccosh(1 + u) without cancellation near u = 0
    return math.log1p(u + math.sqrt(u * (u + 2)))


def distance(z: HyperbolicPoint, w: HyperbolicPoint) -> float:
    return _arccosh1p(float(cosh_distance(z, w) - 1))


def displacement(g: Matrix, basepoint: HyperbolicPoint = I) -> float:
    """``d(g z0, z0)``, exact up to the final logarithm."""
    return distance(mobius(g, basepoint), basepoint)


def displacements(mats: np.ndarray, basepoint: HyperbolicPoint = I) -> np.ndarray:
    """Vectorised displacement for an ``(n, 4)`` integer array.

    ``cosh d - 1 = |w|^2 / (2 y^2)`` with ``w = -c z^2 + (a - d) z + b``.
    """
    m = np.asarray(mats, dtype=float).reshape(-1, 4)
    a, b, c, d = m.T
    x, y = float(basepoint.x), float(basepoint.y)
    if basepoint == I:
        t = (m * m).sum(axis=1)
        return np.log((t + np.sqrt(np.maximum(t * t - 4.0, 0.0))) / 2.0)
    w_re = -c * (x * x - y * y) + (a - d) * x + b
    w_im = -2.0 * c * x * y + (a - d) * y
    u = (w_re * w_re + w_im * w_im) / (2.0 * y * y)
    return np.log1p(u + np.sqrt(u * (u + 2.0)))


def ball_for_radius(gens: GeneratorSet, radius: float, basepoint: HyperbolicPoint = I, budget: int = 5_000_000) -> Ball:
    """Enumerate enough of the group to contain every orbit point of ``basepoint``
    within ``radius``, using ``d(g z0, z0) <= d(g i, i) + 2 d(i, z0)``.
    """
    extra = 2 * distance(I, basepoint) if basepoint != I else 0.0
    return sl2.enumerate_ball(gens, norm_cap=math.exp((radius + extra) / 2 + GUARD), budget=budget)


# ---------------------------------------------------------------- critical exponent


@dataclass
class DeltaEstimate:
    slope: float
    radii: np.ndarray
    counts: np.ndarray
    basepoint: HyperbolicPoint
    window: tuple[float, float]
    residual: float
    second_basepoint: HyperbolicPoint | None = None
    second_slope: float | None = None
    second_window: tuple[float, float] | None = None
    truncated: bool = False

    @property
    def basepoint_discrepancy(self) -> float | None:
        if self.second_slope is None:
            return None
        return abs(self.slope - self.second_slope)

    def rows(self):
        return list(zip(self.radii.tolist(), self.counts.tolist()))


def _fit(radii: np.ndarray, counts: np.ndarray) -> tuple[float, float, tuple[float, float]]:
    # top half of the radius grid
    top = radii >= radii[-1] / 2
    r, lc = radii[top], np.log(counts[top])
    coef, res, *_ = np.polyfit(r, lc, 1, full=True)
    resid = float(np.sqrt(res[0] / len(r))) if len(res) else 0.0
    return float(coef[0]), resid, (float(r[0]), float(r[-1]))


def orbit_counts(disp: np.ndarray, radii: np.ndarray) -> np.ndarray:
    srt = np.sort(disp)
    return np.searchsorted(srt, radii + GUARD, side="right")


def estimate_delta(
    gens: GeneratorSet,
    r_max: float,
    basepoint: HyperbolicPoint = I,
    second_basepoint: HyperbolicPoint | None = HyperbolicPoint(1, 2),
    step: float = 0.25,
    min_points: int = 10,
    budget: int = 5_000_000,
    ball: Ball | None = None,
) -> DeltaEstimate:
    """Least-squares slope of ``log #{g : d(g z0, z0) <= R}`` against ``R``.

    The fit uses the upper half of the grid ``step, 2 step, ..., r_max``.  One
    enumeration serves both basepoints: the second one is counted only up to
    the radius that enumeration is guaranteed to cover, which is
    ``r_max + 2 d(i, z1) - 2 d(i, z2)``.
    """
    if ball is None:
        ball = ball_for_radius(gens, r_max, basepoint, budget)
    mats = ball.as_arrays()
    radii = np.arange(step, r_max + step / 2, step)
    disp = displacements(mats, basepoint)
    counts = orbit_counts(disp, radii)
    if counts[-1] < min_points:
        raise InsufficientGrowth(f"only {counts[-1]} orbit points within {r_max}")
    slope, resid, window = _fit(radii, counts)
    est = DeltaEstimate(slope, radii, counts, basepoint, window, resid, truncated=ball.truncated)
    if second_basepoint is not None:
        d1 = distance(I, basepoint) if basepoint != I else 0.0
        d2 = distance(I, second_basepoint) if second_basepoint != I else 0.0
        r2 = r_max + 2 * d1 - 2 * d2
        radii2 = np.arange(step, r2 + 1e-12, step)
        counts2 = orbit_counts(displacements(mats, second_basepoint), radii2)
        if len(radii2) >= 4 and counts2[-1] >= min_points:
            s2, _, w2 = _fit(radii2, counts2)
            est.second_basepoint = second_basepoint
            est.second_slope = s2
            est.second_window = w2
    log.info("delta estimate %.4f at %s (window %s)", slope, basepoint, window)
    return est


def format_counts_csv(est: DeltaEstimate) -> str:
    lines = ["R,count"]
    lines += [f"{r:.6g},{c}" for r, c in est.rows()]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- shells


@dataclass
class Shell:
    """Elements with displacement in ``(radius - kappa, radius]``.

    ``index`` is the displacement bound: :func:`shell` gives ``S_n`` with
    ``index = n`` and :func:`build_shells` gives ``S_{2n}``.
    """

    index: float
    kappa: float
    elements: np.ndarray  # (m, 4) int64
    basepoint: HyperbolicPoint = field(default=I)
    words: list | None = None

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.size, 1.0 / self.size)

    def norms(self) -> np.ndarray:
        t = (self.elements.astype(float) ** 2).sum(axis=1)
        return np.sqrt((t + np.sqrt(t * t - 4.0)) / 2.0)

    def displacements(self) -> np.ndarray:
        return displacements(self.elements, self.basepoint)


def shell(
    gens: GeneratorSet,
    radius: float,
    kappa: float = 2.0,
    basepoint: HyperbolicPoint = I,
    ball: Ball | None = None,
    budget: int = 5_000_000,
) -> Shell:
    if kappa <= 0:
        raise BadInput("shell width must be positive")
    if ball is None:
        ball = ball_for_radius(gens, radius, basepoint, budget)
    mats = ball.as_arrays()
    disp = displacements(mats, basepoint)
    sel = (disp <= radius + GUARD) & (disp > radius - kappa + GUARD)
    if not sel.any():
        raise EmptyShell(f"no elements with displacement in ({radius - kappa}, {radius}]")
    idx = np.flatnonzero(sel)
    out = Shell(radius, kappa, mats[idx], basepoint)
    out.words = [ball.word_indices(int(k)) for k in idx] if len(idx) <= 100_000 else None
    log.info("shell radius %s kappa %s size %d", radius, kappa, out.size)
    return out


def build_shells(gens: GeneratorSet, n: int, kappa: float = 2.0, basepoint: HyperbolicPoint = I, **kw) -> Shell:
    """The shell ``S_{2n}``; at basepoint i its members have norm at most e^n."""
    return shell(gens, 2 * n, kappa, basepoint, **kw)


def generator_labels(gens: list[Matrix]) -> list[str]:
    names = {v: k for k, v in sl2.LETTERS.items()}
    labels = []
    for j, g in enumerate(gens):
        if g in names:
            labels.append(names[g])
            continue
        # pair each generator with its inverse under a shared number
        inv = sl2.inv(g)
        if inv in gens[:j]:
            labels.append(labels[gens.index(inv)] + "^-1")
        else:
            labels.append(f"g{sum(1 for x in labels if '^' not in x and x not in names.values()) + 1}")
    return labels


def format_shell_csv(sh: Shell, gens: list[Matrix] | None = None) -> str:
    lines = [f"n={sh.index:g} kappa={sh.kappa:g} size={sh.size}", "a,b,c,d,norm,word"]
    labels = generator_labels(gens) if gens is not None else None
    norms = sh.norms()
    for k, (row, nm) in enumerate(zip(sh.elements.tolist(), norms)):
        word = ""
        if labels is not None and sh.words is not None:
            word = " ".join(labels[i] for i in sh.words[k])
        lines.append(",".join(str(x) for x in row) + f",{nm:.12g},{word}")
    return "\n".join(lines) + "\n"


def format_ball_csv(ball: Ball) -> str:
    labels = generator_labels(ball.gens)
    lines = ["a,b,c,d,norm,word"]
    for k, g in enumerate(ball.elements):
        word = " ".join(labels[i] for i in ball.word_indices(k))
        lines.append(",".join(str(x) for x in g) + f",{sl2.operator_norm(g):.12g},{word}")
    return "\n".join(lines) + "\n"
