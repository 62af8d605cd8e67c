"""Koopman action on Fourier modes and projections onto pulled-back functions.

``pi(g) f(x) = f(g^-1 x)`` sends the character with frequency ``v`` to the one
with frequency ``g^-T v``, so averaging operators over a shell act on finitely
supported frequency vectors by exact relabel-and-sum.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import sl2
from .affine import SurfacePoint, compiled
from .errors import BadInput, SupportExplosion
from .flat_metric import neighbourhood
from .hyperbolic import Shell
from .origami import Origami
from .sl2 import Matrix

log = logging.getLogger(__name__)


def frequency_action(g: Matrix, v: tuple[int, int]) -> tuple[int, int]:
    a, b, c, d = g
    m, n = v
    if (m, n) == (0, 0):
        raise BadInput("the zero frequency is excluded")
    return (d * m - c * n, a * n - b * m)


@dataclass
class SparseSpectralVector:
    freqs: np.ndarray  # (k, 2) int64, sorted lexicographically, no (0, 0)
    amps: np.ndarray  # (k,) float64

    @classmethod
    def basis(cls, v: tuple[int, int]) -> "SparseSpectralVector":
        if tuple(v) == (0, 0):
            raise BadInput("the zero frequency is excluded")
        return cls(np.array([v], dtype=np.int64), np.ones(1))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.amps**2)))

    def __len__(self) -> int:
        return len(self.amps)

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(int(m), int(n)): float(a) for (m, n), a in zip(self.freqs, self.amps)}


def _aggregate(fm: np.ndarray, fn: np.ndarray, amps: np.ndarray):
    order = np.lexsort((fn, fm))
    fm, fn, amps = fm[order], fn[order], amps[order]
    if len(fm) == 0:
        return fm, fn, amps
    new = np.ones(len(fm), dtype=bool)
    new[1:] = (fm[1:] != fm[:-1]) | (fn[1:] != fn[:-1])
    starts = np.flatnonzero(new)
    return fm[starts], fn[starts], np.add.reduceat(amps, starts)


def apply_average(elements: np.ndarray, vec: SparseSpectralVector, chunk: int = 2_000_000) -> SparseSpectralVector:
    """``|S|^-1 sum_g pi(g) vec`` for the matrices in ``elements``.

    Summation runs in a fixed order (chunks of the shell, then a sort by
    frequency) so results do not depend on anything but the inputs.
    """
    els = np.asarray(elements, dtype=np.int64).reshape(-1, 4)
    a, b, c, d = (els[:, i][:, None] for i in range(4))
    m = vec.freqs[:, 0][None, :]
    n = vec.freqs[:, 1][None, :]
    per = max(1, chunk // max(1, len(vec)))
    parts_m, parts_n, parts_a = [], [], []
    for lo in range(0, len(els), per):
        sl = slice(lo, lo + per)
        fm = (d[sl] * m - c[sl] * n).ravel()
        fn = (a[sl] * n - b[sl] * m).ravel()
        am = np.broadcast_to(vec.amps[None, :], (fm.size // len(vec), len(vec))).ravel()
        fm, fn, am = _aggregate(fm, fn, am)
        parts_m.append(fm)
        parts_n.append(fn)
        parts_a.append(am)
    fm, fn, am = _aggregate(np.concatenate(parts_m), np.concatenate(parts_n), np.concatenate(parts_a))
    return SparseSpectralVector(np.stack([fm, fn], axis=1), am / len(els))


@dataclass
class NormEstimate:
    lower_bound: float  # certified: ||A|| >= this
    upper_companion: float  # extrapolated, not certified (1 is the trivial bound)
    decay: list[float]  # ||A^j v|| for the best seed, j = 0, 1, ...
    iterations: int
    seed: tuple[int, int]
    support: int
    certified_upper: float = 1.0

    @property
    def bracket_width(self) -> float:
        return self.upper_companion - self.lower_bound


def _bounds_from_decay(decay: list[float]) -> tuple[float, float]:
    lower = 0.0
    ratios = []
    for j in range(1, len(decay)):
        if decay[j] <= 0:
            break
        lower = max(lower, decay[j] ** (1.0 / j))
        if decay[j - 1] > 0:
            ratios.append(decay[j] / decay[j - 1])
    if ratios:
        lower = max(lower, max(ratios))
    upper = 1.0
    if len(ratios) >= 3:
        d1 = ratios[-2] - ratios[-3]
        d2 = ratios[-1] - ratios[-2]
        if d1 > 0 and 0 <= d2 < d1:
            q = d2 / d1
            upper = min(1.0, ratios[-1] + d2 * q / (1 - q))
        elif d2 <= 0:
            upper = min(1.0, ratios[-1])
    return lower, max(upper, lower)


def averaged_norm(
    shell: Shell | np.ndarray,
    iterations: int = 8,
    seeds=((1, 0),),
    support_cap: int = 10**7,
) -> NormEstimate:
    """Power iteration for ``||pi_0(mu)||`` with ``mu`` uniform on the shell.

    Each step costs ``|support| * |S|`` frequency images; iteration stops
    before that work would exceed ``support_cap``.  The returned lower bound
    is the best of ``||A^j v||^(1/j)`` and ``||A^j v|| / ||A^(j-1) v||`` over
    steps and seeds, both valid for a self-adjoint contraction.
    """
    els = shell.elements if isinstance(shell, Shell) else np.asarray(shell)
    best = None
    for seed in seeds:
        v = SparseSpectralVector.basis(seed)
        decay = [1.0]
        j = 0
        while j < iterations:
            if len(v) * len(els) > support_cap:
                if j == 0:
                    raise SupportExplosion(
                        f"one step needs {len(els)} images, above the cap {support_cap}"
                    )
                break
            v = apply_average(els, v)
            j += 1
            decay.append(v.norm())
        lower, upper = _bounds_from_decay(decay)
        est = NormEstimate(lower, upper, decay, j, tuple(seed), len(v))
        if best is None or est.lower_bound > best.lower_bound:
            best = est
    return best


def decay_bound_curve(ns, lower_bounds, delta: float, fit_at: int | None = None) -> tuple[np.ndarray, float]:
    """``exp(-delta n / 2 + 2 log n + C)`` with ``C`` matched at ``fit_at``."""
    ns = np.asarray(ns, dtype=float)
    lb = np.asarray(lower_bounds, dtype=float)
    k = 0 if fit_at is None else int(np.flatnonzero(ns == fit_at)[0])
    C = math.log(lb[k]) + 0.5 * delta * ns[k] - 2 * math.log(ns[k])
    return np.exp(-0.5 * delta * ns + 2 * np.log(ns) + C), C


def format_spectral_csv(rows) -> str:
    lines = ["n,shell_size,lower_bound,upper_companion,paper_bound_with_fitted_C"]
    for n, size, lb, ub, pb in rows:
        lines.append(f"{n},{size},{lb:.12g},{ub:.12g},{pb:.12g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- grid functions


@dataclass
class GridFunction:
    """Midpoint samples on an ``m x m`` grid of cells in each square.

    ``values[i, r, c]`` is the value at ``s = (c + 1/2) / m``,
    ``t = (r + 1/2) / m`` in square ``i``.
    """

    values: np.ndarray
    mean_zero: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[1] != self.values.shape[2]:
            raise BadInput("grid values must have shape (N, m, m)")
        if not np.all(np.isfinite(self.values)):
            raise BadInput("grid values must be finite")

    @property
    def resolution(self) -> int:
        return self.values.shape[1]

    @property
    def degree(self) -> int:
        return self.values.shape[0]

    def integral(self) -> float:
        return float(self.values.mean())

    def norm(self) -> float:
        return math.sqrt(inner(self, self))


def inner(f: GridFunction, h: GridFunction) -> float:
    """``<f, h>`` for the normalised area measure."""
    return float(np.mean(f.values * h.values))


def fiber_average_A(f: GridFunction, origami: Origami | None = None) -> GridFunction:
    if origami is not None and origami.degree != f.degree:
        raise BadInput("grid function does not match the origami")
    mean = f.values.mean(axis=0, keepdims=True)
    return GridFunction(np.broadcast_to(mean, f.values.shape).copy())


def project_P(f: GridFunction, origami: Origami | None = None) -> GridFunction:
    a = fiber_average_A(f, origami)
    return GridFunction(a.values - f.values.mean(), mean_zero=True)


def pullback(torus_values: np.ndarray, degree: int) -> GridFunction:
    tv = np.asarray(torus_values, dtype=float)
    return GridFunction(np.broadcast_to(tv[None], (degree,) + tv.shape).copy())


def torus_inner(f: np.ndarray, h: np.ndarray) -> float:
    return float(np.mean(np.asarray(f) * np.asarray(h)))


def sample(fn, origami_degree: int, m: int) -> GridFunction:
    """Sample ``fn(square, s, t)`` (vectorised) at cell centres."""
    c = (np.arange(m) + 0.5) / m
    sq, r, col = np.meshgrid(np.arange(origami_degree), np.arange(m), np.arange(m), indexing="ij")
    return GridFunction(fn(sq, c[col], c[r]))


def _centres(degree: int, m: int):
    sq, r, col = np.meshgrid(np.arange(degree), np.arange(m), np.arange(m), indexing="ij")
    return sq.ravel(), (2 * col + 1).ravel().astype(np.int64), (2 * r + 1).ravel().astype(np.int64)


def koopman(g: Matrix, f: GridFunction, origami: Origami) -> GridFunction:
    """``(pi(g) f)(x) = f(g^-1 x)`` at cell centres, nearest-cell lookup."""
    m = f.resolution
    sq, S, T = _centres(origami.degree, m)
    amap = compiled(sl2.inv(g), origami)
    nsq, nS, nT = amap(sq, S, T, 2 * m)
    vals = f.values[nsq, nT // 2, nS // 2]
    return GridFunction(vals.reshape(f.values.shape))


def koopman_torus(g: Matrix, f: np.ndarray) -> np.ndarray:
    """Same on the square torus, by the linear action of ``g^-1``."""
    f = np.asarray(f)
    m = f.shape[0]
    a, b, c, d = sl2.inv(g)
    r, col = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    S, T = 2 * col + 1, 2 * r + 1
    nS = (a * S + b * T) % (2 * m)
    nT = (c * S + d * T) % (2 * m)
    return f[nT // 2, nS // 2]


def grid_ball_indicator(origami: Origami, y: SurfacePoint, r: float, m: int) -> GridFunction:
    """Indicator of ``B(y, r)`` sampled at cell centres (``r`` below the
    injectivity bound at ``y``)."""
    from .flat_metric import batch_distance_sq

    D = math.lcm(2 * m, y.s.denominator, y.t.denominator)
    sq, S, T = _centres(origami.degree, m)
    scale = D // (2 * m)
    d2 = batch_distance_sq(origami, y, sq, S * scale, T * scale, D)
    vals = (d2 < (r * D) ** 2).astype(float)
    return GridFunction(vals.reshape(origami.degree, m, m))


@dataclass
class ChainReport:
    """Quantities in the Cauchy-Schwarz step of the survivor-set argument."""

    pairing: float  # <pi(mu) T_n, B_n>
    norm_T: float
    norm_B: float
    operator_bound: float
    target_measure: float
    survivor_measure: float

    @property
    def holds(self) -> bool:
        return self.pairing <= self.operator_bound * self.norm_T * self.norm_B + 1e-12


def cauchy_schwarz_chain(
    origami: Origami,
    shell_elements: np.ndarray,
    target: GridFunction,
    survivors: GridFunction,
    operator_bound: float = 1.0,
) -> ChainReport:
    """Project both indicators to ``H_0`` and evaluate the shell-averaged pairing.

    ``P`` of any function is fibre-constant, so ``pi_H(g)`` acting on it is
    computed on the torus factor.
    """
    Tn = project_P(target, origami)
    Bn = project_P(survivors, origami)
    tv = Tn.values[0]
    acc = np.zeros_like(tv)
    for g in np.asarray(shell_elements).reshape(-1, 4):
        acc += koopman_torus(tuple(int(x) for x in g), tv)
    acc /= len(shell_elements)
    pairing = inner(pullback(acc, origami.degree), Bn)
    return ChainReport(pairing, Tn.norm(), Bn.norm(), operator_bound, target.integral(), survivors.integral())
