"""Command line runner: ``python3 -m origami_lab <subcommand> ...``.

Outputs are written atomically into ``--out`` together with a JSON manifest
recording the resolved arguments, input digests and seed.  Orbit graphs and
group balls are cached under ``$ORIGAMI_LAB_CACHE`` (default
``~/.cache/origami_lab``), keyed by a digest of everything they depend on.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import pickle
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from filelock import FileLock

from . import hyperbolic, origami, sl2, spectral, targets, veech
from .affine import SurfacePoint
from .errors import EXIT_CODES, BadInput, InternalInconsistency, LabError

log = logging.getLogger("origami_lab")

CACHE_ENV = "ORIGAMI_LAB_CACHE"


# ---------------------------------------------------------------- persistence


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    input_digests: dict[str, str]
    outputs: list[str] = field(default_factory=list)
    seed: int | None = None
    cache_hit: bool = False
    started: float = 0.0
    wall_clock: float = 0.0


class Cache:
    """Pickle store with one lock file per entry (single writer, many readers)."""

    def __init__(self, root: Path | None):
        self.root = root

    @classmethod
    def from_env(cls, override: str | None = None, disabled: bool = False) -> "Cache":
        if disabled:
            return cls(None)
        root = override or os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "origami_lab"
        return cls(Path(root))

    def get_or_compute(self, kind: str, key: dict, compute):
        """Return ``(value, hit)``."""
        if self.root is None:
            return compute(), False
        digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:32]
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / f"{kind}-{digest}.pkl"
        with FileLock(str(path) + ".lock"):
            if path.exists():
                try:
                    with open(path, "rb") as fh:
                        return pickle.load(fh), True
                except (pickle.UnpicklingError, EOFError):
                    log.warning("discarding unreadable cache entry %s", path)
            value = compute()
            tmp = path.with_suffix(".tmp")
            with open(tmp, "wb") as fh:
                pickle.dump(value, fh)
            os.replace(tmp, path)
            return value, False


# ---------------------------------------------------------------- argument helpers


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (inclusive) or a comma list."""
    if ":" in text:
        a, b, s = (Fraction(x) for x in text.split(":"))
        if s <= 0:
            raise BadInput("grid step must be positive")
        out, x = [], a
        while x <= b:
            out.append(float(x))
            x += s
        return tuple(out)
    return tuple(float(x) for x in text.split(","))


def parse_int_range(text: str) -> list[int]:
    if ":" in text:
        a, b = (int(x) for x in text.split(":"))
        return list(range(a, b + 1))
    return [int(x) for x in text.split(",")]


def parse_surface_point(text: str, degree: int) -> SurfacePoint:
    """``square,s,t`` with a 1-based square and rational coordinates."""
    parts = text.split(",")
    if len(parts) != 3:
        raise BadInput("a surface point is square,s,t")
    sq = int(parts[0]) - 1
    if not 0 <= sq < degree:
        raise BadInput(f"square {sq + 1} out of range")
    return SurfacePoint(sq, Fraction(parts[1]), Fraction(parts[2]))


def parse_matrix(text: str) -> sl2.Matrix:
    vals = tuple(int(x) for x in text.split(","))
    if len(vals) != 4:
        raise BadInput("a matrix is a,b,c,d")
    return sl2.GroupElement(vals).matrix


# ---------------------------------------------------------------- cached computations


def cached_veech(ctx, o: origami.Origami, budget: int, length_cap: float):
    key = {"origami": str(origami.canonical_form(o).origami), "budget": budget, "cap": length_cap}
    return ctx.cached("veech", key, lambda: veech.veech_generators(o, budget, length_cap=length_cap))


def cached_ball(ctx, gens: sl2.GeneratorSet, norm_cap: float, budget: int) -> sl2.Ball:
    key = {"gens": [list(g.matrix) for g in gens.generators], "norm_cap": norm_cap, "budget": budget}
    return ctx.cached("ball", key, lambda: sl2.enumerate_ball(gens, norm_cap=norm_cap, budget=budget))


class Context:
    def __init__(self, args, manifest: RunManifest, cache: Cache):
        self.args = args
        self.manifest = manifest
        self.cache = cache
        self.out = Path(args.out)

    def cached(self, kind, key, compute):
        value, hit = self.cache.get_or_compute(kind, key, compute)
        self.manifest.cache_hit = self.manifest.cache_hit or hit
        return value

    def write(self, name: str, text: str) -> None:
        path = self.out / name
        atomic_write(path, text)
        self.manifest.outputs.append(str(path))

    def say(self, line: str) -> None:
        print(line)


def _read_surface(ctx, path):
    ctx.manifest.input_digests[str(path)] = file_digest(path)
    return origami.read_origami(path)


def _read_group(ctx, path):
    ctx.manifest.input_digests[str(path)] = file_digest(path)
    return sl2.read_generators(path)


# ---------------------------------------------------------------- subcommands


def cmd_validate(ctx):
    o = _read_surface(ctx, ctx.args.surface)
    st = origami.stratum(o)
    ctx.say(f"ok degree={o.degree} genus={st.genus} stratum={list(st.cone_angles)} vertices={st.vertices}")


def cmd_stratum(ctx):
    o = _read_surface(ctx, ctx.args.surface)
    st = origami.stratum(o)
    lines = ["vertex,cone_angle_multiple,squares"]
    for k, cyc in enumerate(origami.perm_cycles(origami.corner_permutation(o))):
        lines.append(f"{k + 1},{len(cyc)}," + " ".join(str(i + 1) for i in cyc))
    ctx.write("stratum.csv", "\n".join(lines) + "\n")
    ctx.say(f"genus={st.genus} stratum={list(st.cone_angles)}")


def cmd_canonical(ctx):
    o = _read_surface(ctx, ctx.args.surface)
    cf = origami.canonical_form(o)
    ctx.write("canonical.origami", str(cf.origami) + "\n")
    ctx.say(f"automorphisms={cf.automorphisms} relabel={[k + 1 for k in cf.relabel]}")


def cmd_reduced(ctx):
    o = _read_surface(ctx, ctx.args.surface)
    res = origami.is_reduced(o, ctx.args.length_cap)
    ctx.say(f"reduced={res.reduced} method={res.method} basis={[list(v) for v in res.basis]}")


def cmd_veech(ctx):
    o = _read_surface(ctx, ctx.args.surface)
    res, graph = cached_veech(ctx, o, ctx.args.budget, ctx.args.length_cap)
    res.convention = ctx.args.convention
    nodes, edges = veech.format_orbit_graph(graph)
    ctx.write("veech.csv", veech.format_veech_csv(res))
    ctx.write("orbit_nodes.txt", nodes)
    ctx.write("orbit_edges.csv", edges)
    ctx.say(
        f"index={res.reported_index} convention={res.convention} generators={len(res.generators)} "
        f"minus_identity={res.contains_minus_identity}"
    )


def cmd_member(ctx):
    o = _read_surface(ctx, ctx.args.surface)
    g = parse_matrix(ctx.args.matrix)
    _, graph = cached_veech(ctx, o, ctx.args.budget, ctx.args.length_cap)
    ctx.say(f"member={veech.is_member(g, graph, ctx.args.convention)}")


def cmd_delta(ctx):
    a = ctx.args
    gens = _read_group(ctx, a.group)
    z1 = hyperbolic.parse_point(a.basepoint)
    z2 = hyperbolic.parse_point(a.second_basepoint) if a.second_basepoint else None
    extra = 2 * hyperbolic.distance(hyperbolic.I, z1) if z1 != hyperbolic.I else 0.0
    ball = cached_ball(ctx, gens, math.exp((a.r_max + extra) / 2 + hyperbolic.GUARD), a.budget)
    est = hyperbolic.estimate_delta(gens, a.r_max, z1, z2, step=a.step, ball=ball)
    ctx.write("counts.csv", hyperbolic.format_counts_csv(est))
    line = f"delta_hat={est.slope:.6f} window={est.window[0]:g}:{est.window[1]:g}"
    if est.second_slope is not None:
        line += f" second={est.second_slope:.6f} discrepancy={est.basepoint_discrepancy:.6f}"
    ctx.say(line)


def cmd_shells(ctx):
    a = ctx.args
    gens = _read_group(ctx, a.group)
    ball = cached_ball(ctx, gens, math.exp(a.n + hyperbolic.GUARD), a.budget)
    sh = hyperbolic.build_shells(gens, a.n, a.kappa, ball=ball)
    ctx.write("shell.csv", hyperbolic.format_shell_csv(sh, gens.symmetric()))
    ctx.say(f"size={sh.size}")


def cmd_spectral_norm(ctx):
    a = ctx.args
    gens = _read_group(ctx, a.group)
    if not gens.claimed_convex_cocompact:
        log.warning("group not flagged convex cocompact; the decay bound is only a comparison curve")
    ns = parse_int_range(a.n_range)
    ball = cached_ball(ctx, gens, math.exp(max(ns) / 2 + hyperbolic.GUARD), a.budget)
    delta = a.delta
    if delta is None:
        delta = hyperbolic.estimate_delta(gens, max(ns), second_basepoint=None, ball=ball).slope
    ests, sizes = [], []
    for n in ns:
        sh = hyperbolic.shell(gens, n, a.kappa, ball=ball)
        ests.append(spectral.averaged_norm(sh, a.iterations, ((1, 0), (1, 1)), int(a.support_cap)))
        sizes.append(sh.size)
    lbs = [e.lower_bound for e in ests]
    curve, _ = spectral.decay_bound_curve(ns, lbs, delta, fit_at=ns[0])
    rows = [(n, s, e.lower_bound, e.upper_companion, c) for n, s, e, c in zip(ns, sizes, ests, curve)]
    ctx.write("spectral.csv", spectral.format_spectral_csv(rows))
    ctx.say(f"delta_hat={delta:.6f} lower_bounds={[round(x, 6) for x in lbs]}")


def cmd_project_test(ctx):
    a = ctx.args
    o = _read_surface(ctx, a.surface)
    rng = np.random.default_rng(np.random.SeedSequence(a.seed))
    m = a.resolution
    worst = {"idempotence": 0.0, "self_adjoint": 0.0, "pullback_isometry": 0.0, "integral": 0.0}
    for _ in range(a.trials):
        f = spectral.GridFunction(rng.standard_normal((o.degree, m, m)))
        h = spectral.GridFunction(rng.standard_normal((o.degree, m, m)))
        Pf = spectral.project_P(f, o)
        PPf = spectral.project_P(Pf, o)
        worst["idempotence"] = max(worst["idempotence"], spectral.GridFunction(PPf.values - Pf.values).norm())
        sa = abs(spectral.inner(Pf, h) - spectral.inner(f, spectral.project_P(h, o)))
        worst["self_adjoint"] = max(worst["self_adjoint"], sa)
        u, v = rng.standard_normal((m, m)), rng.standard_normal((m, m))
        iso = abs(spectral.inner(spectral.pullback(u, o.degree), spectral.pullback(v, o.degree)) - spectral.torus_inner(u, v))
        worst["pullback_isometry"] = max(worst["pullback_isometry"], iso)
        worst["integral"] = max(worst["integral"], abs(spectral.fiber_average_A(f, o).integral() - f.integral()))
    tol = {"idempotence": 1e-10, "self_adjoint": 1e-10, "pullback_isometry": 1e-12, "integral": 1e-12}
    lines = ["check,worst_error,tolerance,pass"]
    for k, v in worst.items():
        lines.append(f"{k},{v:.3e},{tol[k]:g},{v <= tol[k]}")
    ctx.write("projection.csv", "\n".join(lines) + "\n")
    ctx.say(" ".join(f"{k}={v:.2e}" for k, v in worst.items()))
    if not all(v <= tol[k] for k, v in worst.items()):
        raise InternalInconsistency("projection identities failed")


def _experiment(ctx) -> targets.ExperimentConfig:
    a = ctx.args
    o = _read_surface(ctx, a.surface)
    gens = _read_group(ctx, a.group) if a.group else None
    if gens is None:
        res, _ = cached_veech(ctx, o, a.budget, 6.0)
        gens = sl2.GeneratorSet.from_matrices([g.matrix for g in res.generators])
    target = parse_surface_point(a.target, o.degree) if a.target else None
    alphas = parse_grid(a.alpha_grid) if getattr(a, "alpha_grid", None) else (a.alpha,)
    cfg = targets.ExperimentConfig(
        o, gens, target, alphas, a.norm_max, a.samples, a.seed, a.kappa, a.denominator, a.budget, a.radius_scale
    )
    ctx.manifest.seed = a.seed
    ctx.manifest.config["experiment"] = cfg.snapshot()
    return cfg


def _lab(ctx, cfg):
    ball = cached_ball(ctx, cfg.gens, cfg.norm_max, cfg.budget)
    return targets.Laboratory(cfg, ball)


def cmd_target(ctx):
    cfg = _experiment(ctx)
    res = targets.sweep_alpha(cfg, _lab(ctx, cfg))
    ctx.write("sweep_results.csv", res.results_csv())
    ctx.write("sweep_summary.csv", res.summary_csv())
    ctx.say(f"delta_hat={res.delta_hat:.4f} alpha_star={res.alpha_star}")


def cmd_bc_series(ctx):
    a = ctx.args
    variants = targets.VARIANTS if a.variant == "all" else (a.variant,)
    deltas = parse_grid(a.delta)
    alphas = parse_grid(a.alpha)
    reports = [targets.bc_series(v, d, al, a.terms) for d in deltas for al in alphas for v in variants]
    ctx.write("series.csv", targets.format_series_csv(reports))
    lines = ["variant,delta,alpha,verdict,analytic,flagged"]
    for r in reports:
        lines.append(f"{r.variant},{r.delta:g},{r.alpha:g},{r.verdict},{r.analytic},{r.flagged}")
    ctx.write("series_verdicts.csv", "\n".join(lines) + "\n")
    mism = sum(r.verdict != r.analytic for r in reports)
    ctx.say(f"reports={len(reports)} verdict_mismatches={mism} flagged={sum(r.flagged for r in reports)}")


def cmd_survivors(ctx):
    cfg = _experiment(ctx)
    table = targets.survivor_measure(cfg, ctx.args.alpha, parse_int_range(ctx.args.n_range), ctx.args.delta, _lab(ctx, cfg))
    ctx.write("survivors.csv", table.csv())
    ctx.say(f"constant={table.constant:.6g} measures={[round(float(x), 4) for x in table.measure]}")


def cmd_hitcount(ctx):
    a = ctx.args
    cfg = _experiment(ctx)
    lab = _lab(ctx, cfg)
    cps = parse_grid(a.checkpoints) if a.checkpoints else (cfg.norm_max,)
    lines = ["sample,N,hits,expected,ratio"]
    within = 0
    for k, x in enumerate(targets.sample_points(cfg)):
        hc = targets.quantitative_hit_count(cfg, x, a.alpha, cps, lab)
        for n, h, e, r in zip(hc.checkpoints, hc.hits, hc.expected, hc.ratio):
            lines.append(f"{k},{n:g},{h},{e:.12g},{r:.12g}")
        within += 0.5 <= hc.ratio[-1] <= 2
    ctx.write("hitcount.csv", "\n".join(lines) + "\n")
    ctx.say(f"fraction_ratio_in_[0.5,2]={within / cfg.samples:.4f}")


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="origami-lab", description=__doc__.splitlines()[0])
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--cache-dir", default=None, help=f"cache directory (default ${CACHE_ENV})")
    p.add_argument("--no-cache", action="store_true")
    p.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def surface_cmd(name, fn, help):
        s = sub.add_parser(name, help=help)
        s.add_argument("surface")
        s.set_defaults(fn=fn)
        return s

    surface_cmd("validate", cmd_validate, "check an origami file")
    surface_cmd("stratum", cmd_stratum, "cone points and genus")
    surface_cmd("canonical", cmd_canonical, "canonical labelling")
    s = surface_cmd("reduced", cmd_reduced, "period lattice test")
    s.add_argument("--length-cap", type=float, default=4.0)
    for name, fn in (("veech", cmd_veech), ("member", cmd_member)):
        s = surface_cmd(name, fn, "Veech group" if name == "veech" else "Veech group membership")
        s.add_argument("--budget", type=int, default=100_000)
        s.add_argument("--length-cap", type=float, default=6.0)
        s.add_argument("--convention", choices=("matrix", "projective"), default="matrix")
        if name == "member":
            s.add_argument("--matrix", required=True, help="a,b,c,d")

    s = sub.add_parser("delta", help="critical exponent estimate")
    s.add_argument("--group", required=True)
    s.add_argument("--r-max", type=float, default=12.0)
    s.add_argument("--step", type=float, default=0.25)
    s.add_argument("--basepoint", default="0,1")
    s.add_argument("--second-basepoint", default="1,2")
    s.add_argument("--budget", type=int, default=5_000_000)
    s.set_defaults(fn=cmd_delta)

    s = sub.add_parser("shells", help="the shell S_2n")
    s.add_argument("--group", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--kappa", type=float, default=2.0)
    s.add_argument("--budget", type=int, default=5_000_000)
    s.set_defaults(fn=cmd_shells)

    s = sub.add_parser("spectral-norm", help="bracketed norms of shell averages")
    s.add_argument("--group", required=True)
    s.add_argument("--n-range", default="4:10")
    s.add_argument("--kappa", type=float, default=2.0)
    s.add_argument("--iterations", type=int, default=8)
    s.add_argument("--support-cap", type=float, default=1e7)
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--budget", type=int, default=5_000_000)
    s.set_defaults(fn=cmd_spectral_norm)

    s = surface_cmd("project-test", cmd_project_test, "grid identities of the fibre projection")
    s.add_argument("--resolution", type=int, default=32)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)

    def experiment_cmd(name, fn, help, sweep=False):
        s = sub.add_parser(name, help=help)
        s.add_argument("--surface", required=True)
        s.add_argument("--group", default=None, help="generator file (default: the Veech group)")
        s.add_argument("--target", default=None, help="square,s,t (1-based square)")
        if sweep:
            s.add_argument("--alpha-grid", default="0.25:2.5:0.25")
        else:
            s.add_argument("--alpha", type=float, default=0.5)
        s.add_argument("--norm-max", type=float, default=300.0)
        s.add_argument("--samples", type=int, default=200)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--kappa", type=float, default=2.0)
        s.add_argument("--denominator", type=int, default=2**16)
        s.add_argument("--radius-scale", type=float, default=1.0)
        s.add_argument("--budget", type=int, default=5_000_000)
        s.set_defaults(fn=fn)
        return s

    experiment_cmd("target", cmd_target, "alpha sweep of hit sets", sweep=True)
    s = experiment_cmd("survivors", cmd_survivors, "survivor-set measures")
    s.add_argument("--n-range", default="0:5")
    s.add_argument("--delta", type=float, default=None)
    s = experiment_cmd("hitcount", cmd_hitcount, "hit counts against summed target measures")
    s.add_argument("--checkpoints", default=None)

    s = sub.add_parser("bc-series", help="Borel-Cantelli series partial sums and verdicts")
    s.add_argument("--variant", choices=targets.VARIANTS + ("all",), default="all")
    s.add_argument("--delta", default="0.5,0.8,1.0")
    s.add_argument("--alpha", default="0.25:2:0.25")
    s.add_argument("--terms", type=int, default=10**4)
    s.set_defaults(fn=cmd_bc_series)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    config = {k: v for k, v in vars(args).items() if k != "fn"}
    manifest = RunManifest(args.subcommand, config, {}, started=time.time())
    ctx = Context(args, manifest, Cache.from_env(args.cache_dir, args.no_cache))
    t0 = time.perf_counter()
    try:
        args.fn(ctx)
    except LabError as exc:
        print(f"error category={exc.category} type={type(exc).__name__} message={json.dumps(str(exc))}", file=sys.stderr)
        return EXIT_CODES[exc.category]
    except (OSError, ValueError) as exc:
        print(f"error category=bad_input type={type(exc).__name__} message={json.dumps(str(exc))}", file=sys.stderr)
        return EXIT_CODES["bad_input"]
    except Exception as exc:  # anything else is a broken invariant, not user error
        print(f"error category=internal type={type(exc).__name__} message={json.dumps(str(exc))}", file=sys.stderr)
        return EXIT_CODES["internal"]
    manifest.wall_clock = time.perf_counter() - t0
    if manifest.outputs:
        atomic_write(Path(args.out) / f"{args.subcommand}.manifest.json", json.dumps(asdict(manifest), indent=1, default=str) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
