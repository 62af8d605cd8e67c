import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from origami_lab import sl2
from origami_lab import spectral as sp
from origami_lab.errors import BadInput, SupportExplosion
from origami_lab.hyperbolic import shell
from origami_lab.affine import SurfacePoint

from conftest import random_sl2

freqs = st.tuples(st.integers(-50, 50), st.integers(-50, 50)).filter(lambda v: v != (0, 0))


def test_frequency_action_examples():
    assert sp.frequency_action(sl2.IDENTITY, (3, -4)) == (3, -4)
    assert sp.frequency_action((1, 1, 0, 1), (2, 3)) == (2, 1)
    with pytest.raises(BadInput):
        sp.frequency_action(sl2.IDENTITY, (0, 0))


def test_frequency_action_is_inverse_transpose(rng):
    mats = random_sl2(rng, 15, 10_000)
    vs = rng.integers(-1000, 1000, size=(10_000, 2))
    for g, h, v in zip(mats, mats[::-1], vs):
        v = tuple(int(x) for x in v)
        if v == (0, 0):
            continue
        a, b, c, d = sl2.inv(sl2.transpose(g))
        assert sp.frequency_action(g, v) == (a * v[0] + b * v[1], c * v[0] + d * v[1])
        assert sp.frequency_action(sl2.mul(g, h), v) == sp.frequency_action(g, sp.frequency_action(h, v))
        assert sp.frequency_action(sl2.inv(g), sp.frequency_action(g, v)) == v


def test_discrete_transform_oracle():
    # grid vertices j/64 map to grid vertices, so the pushed character is exact
    m = 64
    x = np.arange(m) / m
    X, Y = np.meshgrid(x, x, indexing="ij")
    for g in [(1, 1, 0, 1), (1, 0, 1, 1), sl2.mul((1, 1, 0, 1), (1, 0, 1, 1))]:
        v = (2, 3)
        f = np.exp(2j * np.pi * (v[0] * X + v[1] * Y))
        a, b, c, d = sl2.inv(g)
        I, J = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        pushed = f[(a * I + b * J) % m, (c * I + d * J) % m]
        spec = np.fft.fft2(pushed) / m**2
        w = sp.frequency_action(g, v)
        expected = np.zeros((m, m), complex)
        expected[w[0] % m, w[1] % m] = 1
        assert np.max(np.abs(spec - expected)) < 1e-8


def test_unitarity_of_single_elements(rng):
    v = sp.SparseSpectralVector(np.array([[1, 0], [2, 5], [-3, 1]]), np.array([0.5, -1.0, 2.0]))
    for g in random_sl2(rng, 10, 50):
        w = sp.apply_average(np.array([g]), v)
        assert w.norm() == pytest.approx(v.norm(), abs=1e-15)


def test_averaged_norm_identity_shell():
    est = sp.averaged_norm(np.array([sl2.IDENTITY]), iterations=5)
    assert est.lower_bound == 1.0


def test_averaged_norm_hand_computation():
    g = (2, 1, 1, 1)
    est = sp.averaged_norm(np.array([g, sl2.inv(g)]), iterations=2, seeds=((1, 0),))
    # A e_(1,0) = (e_(1,-1) + e_(2,1)) / 2 and A^2 e_(1,0) = (e_(2,-3) + 2 e_(1,0) + e_(5,3)) / 4
    assert est.decay == pytest.approx([1.0, math.sqrt(0.5), math.sqrt(6) / 4], abs=1e-15)
    ratio = (math.sqrt(6) / 4) / math.sqrt(0.5)
    assert est.lower_bound == pytest.approx(ratio, abs=1e-15) and est.lower_bound < 1


def test_support_cap():
    sh = shell(sl2.sl2z(), 8, 2.0)
    with pytest.raises(SupportExplosion):
        sp.averaged_norm(sh, support_cap=100)
    est = sp.averaged_norm(sh, iterations=5, support_cap=10**6)
    assert est.iterations == 1


def test_decay_curve_fit():
    curve, C = sp.decay_bound_curve([4, 5], [0.5, 0.3], 1.0, fit_at=4)
    assert curve[0] == pytest.approx(0.5)
    assert curve[1] == pytest.approx(0.5 * math.exp(-0.5) * (25 / 16))


def test_spectral_csv():
    text = sp.format_spectral_csv([(4, 272, 0.5, 0.6, 0.5)])
    assert text.splitlines()[0] == "n,shell_size,lower_bound,upper_companion,paper_bound_with_fitted_C"


# ---------------------------------------------------------------- grid functions


def test_fiber_average_examples(l3):
    f = sp.GridFunction(np.stack([np.ones((8, 8)), 3 * np.ones((8, 8))]))
    assert np.all(sp.fiber_average_A(f).values == 2)
    h = sp.pullback(np.arange(64.0).reshape(8, 8), 3)
    assert np.array_equal(sp.fiber_average_A(h, l3).values, h.values)
    assert np.all(sp.project_P(sp.GridFunction(np.full((3, 8, 8), 4.0)), l3).values == 0)
    with pytest.raises(BadInput):
        sp.fiber_average_A(f, l3)


def test_grid_validation():
    with pytest.raises(BadInput):
        sp.GridFunction(np.zeros((2, 3, 4)))
    with pytest.raises(BadInput):
        sp.GridFunction(np.full((1, 2, 2), np.nan))


@given(st.integers(0, 10**6))
def test_projection_identities(seed):
    rng = np.random.default_rng(seed)
    f = sp.GridFunction(rng.standard_normal((3, 32, 32)))
    h = sp.GridFunction(rng.standard_normal((3, 32, 32)))
    Pf = sp.project_P(f)
    assert np.max(np.abs(sp.project_P(Pf).values - Pf.values)) < 1e-12
    assert abs(sp.inner(Pf, h) - sp.inner(f, sp.project_P(h))) < 1e-12
    assert abs(sp.inner(sp.fiber_average_A(f), h) - sp.inner(f, sp.fiber_average_A(h))) < 1e-12
    # direct double sum for <A f, h>
    direct = sum(
        (f.values[:, r, c].mean()) * h.values[i, r, c] for i in range(3) for r in range(0, 32, 8) for c in range(0, 32, 8)
    ) / (3 * 16)
    sub = sp.GridFunction(sp.fiber_average_A(f).values[:, ::8, ::8])
    assert abs(sp.inner(sub, sp.GridFunction(h.values[:, ::8, ::8])) - direct) < 1e-12
    assert abs(Pf.integral()) < 1e-12
    assert abs(sp.fiber_average_A(f).integral() - f.integral()) < 1e-12
    u, v = rng.standard_normal((2, 32, 32))
    assert abs(sp.inner(sp.pullback(u, 3), sp.pullback(v, 3)) - sp.torus_inner(u, v)) < 1e-12


def test_projected_indicator_norm(l3):
    y = SurfacePoint(0, F(3, 7), F(5, 7))
    chi = sp.grid_ball_indicator(l3, y, 0.2, 64)
    Tn = sp.project_P(chi, l3)
    mu = chi.integral()
    assert mu == pytest.approx(math.pi * 0.04 / 3, rel=0.05)
    assert Tn.norm() ** 2 <= (1 - mu) * mu + 1e-12


def test_koopman_torus_commutes(l3, l3_veech):
    res, _ = l3_veech
    m = 64
    c = (np.arange(m) + 0.5) / m
    S, T = np.meshgrid(c, c, indexing="xy")  # values[r, col] at s = c[col], t = c[r]
    f = lambda s, t: np.cos(2 * np.pi * s) + np.sin(2 * np.pi * (s + 2 * t))
    lip = 2 * np.pi * (1 + math.sqrt(5))
    for g in [g.matrix for g in res.generators]:
        lhs = sp.koopman(g, sp.pullback(f(S, T), 3), l3)
        a, b, cc, d = sl2.inv(g)
        exact = f((a * S + b * T) % 1, (cc * S + d * T) % 1)
        rhs = sp.pullback(exact, 3)
        assert np.max(np.abs(lhs.values - rhs.values)) <= lip * math.sqrt(2) / m
        # nearest-cell lookup on the torus factor agrees with the surface computation
        assert np.array_equal(lhs.values[0], sp.koopman_torus(g, f(S, T)))


def test_koopman_preserves_indicators(l3, l3_veech):
    res, _ = l3_veech
    chi = sp.grid_ball_indicator(l3, SurfacePoint(1, F(1, 2), F(1, 2)), 0.2, 32)
    for g in [g.matrix for g in res.generators]:
        img = sp.koopman(g, chi, l3)
        assert set(np.unique(img.values)) <= {0.0, 1.0}
        assert img.integral() == chi.integral()  # grid bijection


def test_cauchy_schwarz_chain(torus_origami):
    sh = shell(sl2.sl2z(), 4, 2.0)
    est = sp.averaged_norm(sh, iterations=6)
    y = SurfacePoint(0, F(3, 7), F(5, 7))
    m = 64
    target = sp.grid_ball_indicator(torus_origami, y, 0.1, m)
    # survivors: cells that no element of the shell sends into the target
    hit = np.zeros((m, m), bool)
    for g in sh.elements.tolist():
        hit |= sp.koopman_torus(sl2.inv(tuple(g)), target.values[0]) > 0
    surv = sp.GridFunction((~hit).astype(float)[None])
    rep = sp.cauchy_schwarz_chain(torus_origami, sh.elements, target, surv, est.upper_companion)
    assert rep.holds
    assert rep.survivor_measure < 1
