"""Shrinking-target experiments: hit sets, alpha sweeps, series and survivors."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from . import sl2
from .affine import SurfacePoint, compiled, is_singular
from .errors import BadInput
from .flat_metric import TargetSpec, batch_distance_sq, cone_order, injectivity_bound
from .hyperbolic import estimate_delta
from .origami import Origami, format_cycles
from .sl2 import Ball, GeneratorSet

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = tuple(round(0.25 * k, 2) for k in range(1, 11))


def default_target(o: Origami) -> SurfacePoint:
    """A regular point with denominator-7 coordinates."""
    return SurfacePoint(0, Fraction(3, 7), Fraction(5, 7))


@dataclass
class ExperimentConfig:
    origami: Origami
    gens: GeneratorSet
    target: SurfacePoint | None = None
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    norm_max: float = 300.0
    samples: int = 200
    seed: int = 0
    kappa: float = 2.0
    denominator: int = 2**16
    budget: int = 5_000_000
    radius_scale: float = 1.0  # phi(x) = radius_scale * x^-alpha

    def __post_init__(self):
        self.alphas = tuple(float(a) for a in self.alphas)
        if list(self.alphas) != sorted(self.alphas):
            raise BadInput("alpha grid must be sorted ascending")
        if self.norm_max < 2:
            raise BadInput("norm cap must be at least 2")
        if self.radius_scale <= 0:
            raise BadInput("radius scale must be positive")
        if self.samples < 1 or self.denominator < 1:
            raise BadInput("need at least one sample and a positive denominator")
        if self.target is None:
            self.target = default_target(self.origami)
        if self.target.square >= self.origami.degree:
            raise BadInput("target square out of range")

    def snapshot(self) -> dict:
        d = {k: getattr(self, k) for k in ("alphas", "norm_max", "samples", "seed", "kappa", "denominator", "budget", "radius_scale")}
        d["alphas"] = list(self.alphas)
        d["origami"] = {
            "degree": self.origami.degree,
            "sigma": format_cycles(self.origami.sigma),
            "tau": format_cycles(self.origami.tau),
        }
        d["gens"] = [list(g.matrix) for g in self.gens.generators]
        t = self.target
        d["target"] = [t.square + 1, str(t.s), str(t.t)]
        return d


def sample_points(config: ExperimentConfig) -> list[SurfacePoint]:
    """Sample ``k`` comes from its own stream ``SeedSequence(seed, spawn_key=(k,))``,
    so any subset of samples can be regenerated independently."""
    out = []
    D = config.denominator
    for k in range(config.samples):
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(k,)))
        sq = int(rng.integers(config.origami.degree))
        s, t = rng.integers(D, size=2)
        out.append(SurfacePoint(sq, Fraction(int(s), D), Fraction(int(t), D)))
    return out


@dataclass
class HitRecord:
    x: SurfacePoint
    alphas: tuple[float, ...]
    index: dict[float, np.ndarray]  # ball indices of the hits, sorted by norm
    norms: dict[float, np.ndarray]
    distances: dict[float, np.ndarray]
    decade_counts: dict[float, np.ndarray]  # band k: norms in (N / 2^(k+1), N / 2^k]
    ball: Ball | None = field(default=None, repr=False)

    def hits_total(self, alpha: float) -> int:
        return len(self.index[alpha])

    def hits_top_decade(self, alpha: float) -> int:
        return int(self.decade_counts[alpha][0])

    def min_norm_first_hit(self, alpha: float) -> float:
        n = self.norms[alpha]
        return float(n[0]) if len(n) else math.inf

    def hits(self, alpha: float) -> list[tuple[sl2.Matrix, float, float]]:
        els = self.ball.elements
        return [
            (els[int(k)], float(n), float(d))
            for k, n, d in zip(self.index[alpha], self.norms[alpha], self.distances[alpha])
        ]


class Laboratory:
    """One group ball and target, shared by every sample of an experiment.

    Images of a sample under all ball elements are computed in integer
    coordinates with denominator ``D`` (a multiple of the sampling and target
    denominators).  On the torus they come straight from the matrices; on
    other origamis they are propagated along the breadth-first tree of the
    ball, one compiled generator map per layer.
    """

    def __init__(self, config: ExperimentConfig, ball: Ball | None = None):
        self.config = config
        o = config.origami
        y = config.target
        if is_singular(o, y):
            warnings.warn("target centre is a cone point; ball measures carry the cone factor")
        self.ball = ball if ball is not None else sl2.enumerate_ball(
            config.gens, norm_cap=config.norm_max, budget=config.budget
        )
        self.mats = self.ball.as_arrays()
        self.norms = np.asarray(self.ball.norms(), dtype=float)
        self.D = math.lcm(config.denominator, y.s.denominator, y.t.denominator)
        self.injectivity = injectivity_bound(o, y)
        self.spec = TargetSpec(y, injectivity=self.injectivity)
        self.torus = o.degree == 1
        if not self.torus:
            self._layers = self._build_layers()
        self._order = np.argsort(self.norms, kind="stable")

    def _build_layers(self):
        depth = np.asarray(self.ball.depth)
        via = np.asarray(self.ball.via)
        parent = np.asarray(self.ball.parent)
        maps = [compiled(g, self.config.origami) for g in self.ball.gens]
        layers = []
        bounds = np.searchsorted(depth, np.arange(1, depth.max() + 2))
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            for gi in range(len(maps)):
                idx = lo + np.flatnonzero(via[lo:hi] == gi)
                if len(idx):
                    layers.append((idx, parent[idx], maps[gi]))
        return layers

    def images(self, x: SurfacePoint):
        D = self.D
        S0 = int(x.s * D)
        T0 = int(x.t * D)
        if x.s * D != S0 or x.t * D != T0:
            raise BadInput("sample coordinates must be multiples of 1/D")
        if self.torus:
            a, b, c, d = self.mats.T
            return np.zeros(len(a), dtype=np.int64), (a * S0 + b * T0) % D, (c * S0 + d * T0) % D
        n = len(self.mats)
        sq = np.empty(n, dtype=np.int64)
        S = np.empty(n, dtype=np.int64)
        T = np.empty(n, dtype=np.int64)
        sq[0], S[0], T[0] = x.square, S0, T0
        for idx, par, amap in self._layers:
            sq[idx], S[idx], T[idx] = amap(sq[par], S[par], T[par], D)
        return sq, S, T

    def distance_sq(self, x: SurfacePoint) -> np.ndarray:
        """Squared distance ``|g x - y|^2`` in units of ``1/D^2``, exact when it is
        below the injectivity bound at the target."""
        sq, S, T = self.images(x)
        return batch_distance_sq(self.config.origami, self.config.target, sq, S, T, self.D)

    def radius(self, alpha: float, norms=None) -> np.ndarray:
        norms = self.norms if norms is None else norms
        r = self.config.radius_scale * np.asarray(norms, dtype=float) ** (-alpha)
        return np.minimum(r, float(self.injectivity))

    def record(self, x: SurfacePoint, alphas=None) -> HitRecord:
        if is_singular(self.config.origami, x):
            warnings.warn(f"sample {x} is a cone point")
        alphas = self.config.alphas if alphas is None else tuple(alphas)
        d2 = self.distance_sq(x)[self._order].astype(float)
        norms = self.norms[self._order]
        N = self.config.norm_max
        nbands = max(1, int(math.ceil(math.log2(N))) + 1)
        band = np.floor(np.log2(N / norms)).astype(int).clip(0, nbands - 1)
        rec = HitRecord(x, alphas, {}, {}, {}, {}, self.ball)
        for a in alphas:
            r = self.radius(a, norms) * self.D
            hit = np.flatnonzero(d2 < r * r)
            rec.index[a] = self._order[hit]
            rec.norms[a] = norms[hit]
            rec.distances[a] = np.sqrt(d2[hit]) / self.D
            rec.decade_counts[a] = np.bincount(band[hit], minlength=nbands)
        return rec

    def delta_hat(self) -> float:
        r_max = 2 * math.log(self.config.norm_max)
        try:
            return estimate_delta(self.config.gens, r_max, second_basepoint=None, ball=self.ball).slope
        except BadInput:
            return 0.0


def hit_set(config: ExperimentConfig, x: SurfacePoint, alpha: float, lab: Laboratory | None = None) -> HitRecord:
    lab = lab or Laboratory(config)
    return lab.record(x, (alpha,))


@dataclass
class SweepResult:
    rows: list[tuple[float, int, int, int, float]]
    fractions: dict[float, float]
    delta_hat: float
    alpha_star: float | None

    def results_csv(self) -> str:
        lines = ["alpha,sample,hits_total,hits_top_decade,min_norm_first_hit"]
        for a, k, tot, top, mn in self.rows:
            lines.append(f"{a:g},{k},{tot},{top},{'inf' if math.isinf(mn) else f'{mn:.12g}'}")
        return "\n".join(lines) + "\n"

    def summary_csv(self) -> str:
        star = "nan" if self.alpha_star is None else f"{self.alpha_star:g}"
        lines = ["alpha,fraction_accruing,delta_hat,alpha_star"]
        for a, f in self.fractions.items():
            lines.append(f"{a:g},{f:.6g},{self.delta_hat:.6g},{star}")
        return "\n".join(lines) + "\n"


def sweep_alpha(config: ExperimentConfig, lab: Laboratory | None = None) -> SweepResult:
    """Per sample and exponent, total hits and hits with norm in
    ``(N_max / 2, N_max]``; the transition ``alpha*`` is the largest exponent
    at which at least half of the samples still hit in that top band."""
    lab = lab or Laboratory(config)
    rows = []
    accruing = {a: 0 for a in config.alphas}
    for k, x in enumerate(sample_points(config)):
        rec = lab.record(x)
        for a in config.alphas:
            top = rec.hits_top_decade(a)
            rows.append((a, k, rec.hits_total(a), top, rec.min_norm_first_hit(a)))
            accruing[a] += top > 0
    rows.sort(key=lambda r: (r[0], r[1]))
    fractions = {a: accruing[a] / config.samples for a in config.alphas}
    ok = [a for a, f in fractions.items() if f >= 0.5]
    return SweepResult(rows, fractions, lab.delta_hat(), max(ok) if ok else None)


# ---------------------------------------------------------------- quantitative counts


@dataclass
class HitCount:
    checkpoints: np.ndarray
    hits: np.ndarray  # A(N, x)
    expected: np.ndarray  # phi(N): summed target measures

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.hits / self.expected

    def csv(self) -> str:
        lines = ["N,hits,expected,ratio"]
        for n, a, p, r in zip(self.checkpoints, self.hits, self.expected, self.ratio):
            lines.append(f"{n:g},{a},{p:.12g},{r:.12g}")
        return "\n".join(lines) + "\n"


def quantitative_hit_count(config: ExperimentConfig, x: SurfacePoint, alpha: float, checkpoints=None, lab: Laboratory | None = None) -> HitCount:
    lab = lab or Laboratory(config)
    checkpoints = np.asarray([config.norm_max] if checkpoints is None else checkpoints, dtype=float)
    if checkpoints.max() > config.norm_max * (1 + 1e-12):
        raise BadInput("checkpoints beyond the enumerated norm cap")
    rec = lab.record(x, (alpha,))
    hit_norms = rec.norms[alpha]
    k = cone_order(config.origami, config.target)
    measure = k * math.pi * lab.radius(alpha) ** 2 / config.origami.degree
    order = np.argsort(lab.norms, kind="stable")
    srt = lab.norms[order]
    cum = np.concatenate([[0.0], np.cumsum(measure[order])])
    pos = np.searchsorted(srt, checkpoints * (1 + 1e-12), side="right")
    hits = np.searchsorted(hit_norms, checkpoints * (1 + 1e-12), side="right")
    return HitCount(checkpoints, hits, cum[pos])


# ---------------------------------------------------------------- survivors


@dataclass
class SurvivorTable:
    ns: np.ndarray
    measure: np.ndarray  # fraction of samples with no hit below norm e^n
    stderr: np.ndarray
    bound: np.ndarray  # C n^4 e^(-2 delta n) phi(e^n)^-2 with fitted C
    constant: float
    delta: float
    alpha: float

    def csv(self) -> str:
        lines = ["n,survivor_measure,stderr,bound"]
        for n, m, s, b in zip(self.ns, self.measure, self.stderr, self.bound):
            lines.append(f"{n:g},{m:.6g},{s:.6g},{b:.6g}")
        return "\n".join(lines) + "\n"


def survivor_measure(config: ExperimentConfig, alpha: float, ns, delta: float | None = None, lab: Laboratory | None = None) -> SurvivorTable:
    """``mu(E_n)`` estimated from the samples, with ``E_n`` the points with no
    hit among elements of norm below ``e^n``."""
    lab = lab or Laboratory(config)
    ns = np.asarray(ns, dtype=float)
    if np.exp(ns.max()) > config.norm_max * (1 + 1e-12):
        raise BadInput("e^n exceeds the enumerated norm cap")
    first = np.array([lab.record(x, (alpha,)).min_norm_first_hit(alpha) for x in sample_points(config)])
    meas = np.array([(first >= math.exp(n)).mean() for n in ns])
    se = np.sqrt(meas * (1 - meas) / len(first))
    delta = lab.delta_hat() if delta is None else delta
    # phi(e^n)^-2 = c^-2 e^(2 alpha n); the constant c is absorbed into C
    shape = ns**4 * np.exp(-2 * delta * ns + 2 * alpha * ns)
    pos = ns >= 1
    C = float(np.max(meas[pos] / shape[pos])) if pos.any() else 1.0
    bound = np.where(pos, C * shape, 1.0)  # the n^4 factor is degenerate at n = 0
    return SurvivorTable(ns, meas, se, bound, C, delta, alpha)


# ---------------------------------------------------------------- series

VARIANTS = ("stated1", "proof1", "stated2")


def series_exponent(variant: str, delta: float, alpha: float) -> float:
    if variant == "stated1":
        return 2 * delta - 2 - 2 * alpha
    if variant == "proof1":
        return 2 * delta - 1 - 2 * alpha
    if variant == "stated2":
        return 2 * alpha - 2 * delta - 1
    raise BadInput(f"unknown series variant {variant!r}")


def _log_power(variant: str) -> int:
    return 4 if variant == "stated2" else 0


def series_terms(variant: str, delta: float, alpha: float, n: np.ndarray) -> np.ndarray:
    p = series_exponent(variant, delta, alpha)
    n = np.asarray(n, dtype=float)
    return np.log(n) ** _log_power(variant) * n**p


def analytic_verdict(variant: str, delta: float, alpha: float) -> str:
    # sum (log n)^k n^p converges exactly when p < -1, whatever k >= 0
    return "converges" if series_exponent(variant, delta, alpha) < -1 else "diverges"


def condensation_verdict(variant: str, delta: float, alpha: float, k: float = 1e6) -> str:
    """Cauchy condensation: ``2^j f(2^j)`` has ratio ``2^(p+1) ((j+1)/j)^L`` far
    out; the series converges when that ratio is below one."""
    p = series_exponent(variant, delta, alpha)
    log_ratio = (p + 1) * math.log(2) + _log_power(variant) * math.log1p(1 / k)
    return "converges" if log_ratio < math.log1p(-1e-9) else "diverges"


@dataclass
class SeriesReport:
    variant: str
    delta: float
    alpha: float
    checkpoints: np.ndarray
    terms: np.ndarray
    partial_sums: np.ndarray
    verdict: str
    analytic: str
    flagged: bool  # stated1 and proof1 disagree at this (delta, alpha)

    def integral_bracket(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounds on the partial sums from the integral test.

        ``f`` is monotone for the pure power variants and unimodal for the
        logarithmic one, so ``|sum_{n<=N} f(n) - int_1^N f| <= max f``.
        """
        p = series_exponent(self.variant, self.delta, self.alpha)
        L = _log_power(self.variant)
        lo, hi = [], []
        for N in self.checkpoints:
            I = _integral(p, L, float(N))
            f1 = 0.0 if L else 1.0
            fN = math.log(N) ** L * N**p
            if L == 0:
                lo.append(I + min(f1, fN))
                hi.append(I + max(f1, fN))
            else:
                fmax = _unimodal_max(p, L, float(N))
                lo.append(I - fmax)
                hi.append(I + fmax)
        return np.array(lo), np.array(hi)

    def csv_rows(self) -> list[str]:
        return [
            f"{self.variant},{int(n)},{t:.12g},{s:.12g},{self.verdict}"
            for n, t, s in zip(self.checkpoints, self.terms, self.partial_sums)
        ]


def _integral(p: float, L: int, N: float) -> float:
    if L == 0:
        return math.log(N) if p == -1 else (N ** (p + 1) - 1) / (p + 1)
    # int_1^N (log x)^L x^p dx = int_0^log N u^L e^((p+1) u) du
    val, _ = integrate.quad(lambda u: u**L * math.exp((p + 1) * u), 0.0, math.log(N), limit=200)
    return val


def _unimodal_max(p: float, L: int, N: float) -> float:
    f = lambda x: math.log(x) ** L * x**p
    cands = [f(N)]
    if p < 0:
        x = math.exp(-L / p)
        if 1 <= x <= N:
            cands.append(f(x))
    return max(cands)


def bc_series(variant: str, delta: float, alpha: float, terms: int = 10**4, checkpoints=None) -> SeriesReport:
    if terms < 10**3:
        raise BadInput("use at least 1000 terms")
    if not 0 < delta <= 1:
        raise BadInput("critical exponent must lie in (0, 1]")
    n = np.arange(1, terms + 1)
    f = series_terms(variant, delta, alpha, n)
    ps = np.cumsum(f)
    if checkpoints is None:
        checkpoints = np.unique(np.round(np.logspace(1, math.log10(terms), 13)).astype(int))
    cp = np.asarray(checkpoints, dtype=int)
    flagged = analytic_verdict("stated1", delta, alpha) != analytic_verdict("proof1", delta, alpha)
    return SeriesReport(
        variant,
        delta,
        alpha,
        cp,
        f[cp - 1],
        ps[cp - 1],
        condensation_verdict(variant, delta, alpha),
        analytic_verdict(variant, delta, alpha),
        flagged,
    )


def format_series_csv(reports) -> str:
    lines = ["variant,n,term,partial_sum,verdict"]
    for r in reports:
        lines += r.csv_rows()
    return "\n".join(lines) + "\n"
