import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from coupledcircle.density import (
    GridDensity,
    MembershipSpec,
    PeriodicSpline,
    SupportError,
    bv_distance,
    check_membership,
    norms,
    normalize,
    sample,
    support_arc,
    wasserstein1,
    wasserstein_empirical,
    wasserstein_to_dirac,
)
from coupledcircle.torus import circ_dist


def cos_density(M, alpha):
    return GridDensity.from_function(lambda x: 1 + alpha * np.cos(2 * np.pi * x), M)


def test_constant_evaluation():
    d = GridDensity.constant(64)
    x = np.random.default_rng(1).random(50)
    assert np.allclose(d.evaluate(x), 1.0, atol=1e-15)
    assert np.allclose(d.evaluate_deriv(x), 0.0, atol=1e-13)


def test_trig_evaluation():
    d = GridDensity.trig(1024, a=0.2)
    assert d.evaluate(0.25) == pytest.approx(1.2, abs=1e-8)
    assert d.evaluate_deriv(0.0) == pytest.approx(0.4 * math.pi, abs=1e-6)
    # off-node accuracy against the analytic function
    x = np.random.default_rng(2).random(200)
    assert np.max(np.abs(d.evaluate(x) - (1 + 0.2 * np.sin(2 * np.pi * x)))) < 1e-10


def test_nodes_reproduced_exactly():
    v = np.random.default_rng(3).random(32) + 0.5
    d = GridDensity(v)
    assert np.array_equal(d.evaluate(d.nodes), v)


def test_periodic_seam_is_c1():
    d = GridDensity(np.random.default_rng(4).random(16) + 0.5)
    e = 1e-9
    assert d.evaluate(1 - e) == pytest.approx(d.evaluate(0.0), abs=1e-7)
    assert d.evaluate_deriv(1 - e) == pytest.approx(d.evaluate_deriv(0.0), abs=1e-6)


def test_validation():
    with pytest.raises(ValueError, match="power of two"):
        GridDensity(np.ones(12))
    with pytest.raises(ValueError, match="nonnegative"):
        GridDensity(np.r_[np.ones(7), -1.0])
    with pytest.raises(ValueError):
        GridDensity.trig(64, a=0.9, b=0.9)
    with pytest.raises(ValueError, match="zero mass"):
        normalize(GridDensity(np.zeros(8)))


def test_cumulative_matches_quadrature():
    d = GridDensity.trig(256, a=0.3, b=-0.2, k=2)
    for t in (0.3, 1.7, -0.4):
        c0, c1 = d.cumulative(t)
        # analytic antiderivatives of 1 + a sin(4 pi u) + b cos(4 pi u)
        w = 4 * np.pi
        F = lambda u: u - 0.3 * np.cos(w * u) / w - 0.2 * np.sin(w * u) / w  # noqa: E731
        assert c0 == pytest.approx(F(t) - F(0.0), abs=1e-9)
        from scipy.integrate import quad
        ref, _ = quad(lambda u: u * (1 + 0.3 * np.sin(w * u) - 0.2 * np.cos(w * u)), 0.0, t, epsabs=1e-13)
        assert c1 == pytest.approx(ref, abs=1e-9)


def test_norms_constant():
    n = norms(GridDensity.constant(128))
    assert (n.l1, n.variation, n.bv) == (1.0, 0.0, 1.0)


def test_norms_cos():
    n = norms(cos_density(2048, 0.1))
    assert n.variation == pytest.approx(0.4, abs=1e-6)
    assert n.sup_deriv == pytest.approx(0.2 * math.pi, abs=1e-6)
    assert n.bv == n.l1 + n.variation
    assert n.l1 == pytest.approx(1.0, abs=1e-10)
    assert n.lip_deriv == pytest.approx(0.4 * math.pi**2, rel=1e-3)


def test_norms_second_order_in_grid():
    errs = [abs(norms(cos_density(M, 0.1)).variation - 0.4) for M in (128, 256, 512)]
    assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3


@given(st.floats(0.0, 0.9), st.floats(0.0, 0.9), st.integers(1, 4))
def test_norm_identities(a, b, k):
    if math.hypot(a, b) > 1:
        return
    n = norms(GridDensity.trig(256, a, b, k))
    assert n.bv == n.l1 + n.variation
    assert min(n.l1, n.variation, n.sup_deriv, n.lip_deriv) >= 0
    assert abs(n.l1 - 1) <= 1e-10


def test_membership_examples():
    m = check_membership(GridDensity.constant(256), MembershipSpec(1, 1, 1))
    assert m.member and m.margins == pytest.approx((1, 1, 1), abs=1e-12)
    d = cos_density(2048, 0.1)
    m = check_membership(d, MembershipSpec(0.3, 1, 10))
    assert not m.member and m.margin_R == pytest.approx(-0.1, abs=1e-6)
    assert check_membership(d, MembershipSpec(1, 1, 10)).member
    assert check_membership(d, MembershipSpec(0.4, 1, 10)).inconclusive
    with pytest.raises(ValueError):
        MembershipSpec(0, 1, 1)


def test_support_arc_examples():
    M = 1024
    a = support_arc(GridDensity.bump(M, 0.3, 0.4))
    assert circ_dist(a.start, 0.3) <= 2 / M
    assert abs(a.length - 0.4) <= 2 / M
    with pytest.raises(SupportError, match="support not proper"):
        support_arc(GridDensity.constant(M))
    w = support_arc(GridDensity.bump(M, 0.9, 0.2))
    assert circ_dist(w.start, 0.9) <= 2 / M
    assert abs(w.length - 0.2) <= 2 / M


def test_bump_is_compact_between_nodes():
    d = GridDensity.bump(512, 0.3, 0.4)
    x = np.linspace(0.72, 1.28, 2001)
    assert np.all(d.evaluate(x) == 0.0)


def test_w1_self_and_diameter():
    d = GridDensity.trig(256, a=0.5)
    assert wasserstein1(d, d) == 0.0
    e = GridDensity.bump(256, 0.6, 0.1)
    assert 0 < wasserstein1(d, e) <= 0.5


def test_w1_uniform_arc_to_dirac():
    # analytic value L/4 and a Monte-Carlo transport oracle
    M, c, L = 8192, 0.37, 0.2
    x = np.arange(M) / M
    d = GridDensity((circ_dist(x, c) < L / 2 - 1e-12).astype(float)).normalize()
    w = wasserstein_to_dirac(d, c)
    assert w == pytest.approx(L / 4, abs=2e-4)
    pts = sample(d, 200_000, seed=5)
    mc = float(np.mean(circ_dist(pts, c)))
    assert w == pytest.approx(mc, abs=5e-4)
    assert w <= L


@given(st.integers(0, 10**6))
def test_w1_to_dirac_matches_cdf_route(seed):
    # dual route: inf_c int |F(t) - 1{t >= x0} - c| dt on a fine grid
    rng = np.random.default_rng(seed)
    d = GridDensity.trig(512, *rng.uniform(-0.4, 0.4, 2), k=int(rng.integers(1, 4)))
    x0 = float(rng.random())
    K = 1 << 16
    t = (np.arange(K) + 0.5) / K
    F = np.cumsum(d.evaluate(t)) / K
    D = F - (t >= x0)
    c = np.median(D)
    assert wasserstein_to_dirac(d, x0) == pytest.approx(np.mean(np.abs(D - c)), abs=1e-4)


def test_w1_shifted_narrow_bumps():
    M = 4096
    d, e = GridDensity.bump(M, 0.095, 0.01), GridDensity.bump(M, 0.295, 0.01)
    assert wasserstein1(d, e) == pytest.approx(0.2, abs=1e-4)
    # the Dirac limit of either bump
    assert wasserstein_to_dirac(d, 0.1) < 0.01


def _random_density(seed, M=256):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(-0.4, 0.4, 2)
    k = int(rng.integers(1, 4))
    return GridDensity.trig(M, a, b, k)


@given(st.integers(0, 10**6))
def test_w1_metric_properties(seed):
    d, e, f = (_random_density(seed + i) for i in range(3))
    assert wasserstein1(d, e) == wasserstein1(e, d)
    assert wasserstein1(d, f) <= wasserstein1(d, e) + wasserstein1(e, f) + 1e-9
    assert wasserstein1(d, e) <= 0.5


def test_w1_dual_lower_bound():
    # Kantorovich-Rubinstein: integrals of 1-Lipschitz functions never exceed W1
    rng = np.random.default_rng(11)
    d, e = _random_density(1), GridDensity.bump(256, 0.2, 0.3)
    w = wasserstein1(d, e)
    t = (np.arange(2**15) + 0.5) / 2**15
    fd, fe = d.evaluate(t) / d.mass, e.evaluate(t) / e.mass
    best = 0.0
    for _ in range(100):
        knots = np.sort(rng.random(8))
        vals = np.cumsum(rng.uniform(-1, 1, 8) * np.diff(np.r_[knots, knots[0] + 1]))
        xs = np.r_[knots - 1, knots, knots + 1]
        ys = np.r_[vals, vals, vals]
        # periodic piecewise-linear; rescale so every slope is <= 1
        slopes = np.abs(np.diff(ys) / np.diff(xs))
        ell = np.interp(t, xs, ys) / max(1.0, slopes.max())
        val = abs(np.mean(ell * (fd - fe)))
        best = max(best, val)
        assert val <= w + 1e-6
    assert best > 0.1 * w


def test_empirical_w1_matches_density_w1_for_large_samples():
    d = GridDensity.trig(512, a=0.4)
    pts = sample(d, 200_000, seed=3)
    assert wasserstein_empirical(pts, d) < 3 / math.sqrt(pts.size)


def test_normalize_examples():
    d = normalize(GridDensity(np.full(16, 2.0)))
    assert np.array_equal(d.values, np.ones(16))
    e = normalize(GridDensity(np.random.default_rng(0).random(64) + 0.1))
    assert normalize(e) is e or np.array_equal(normalize(e).values, e.values)
    assert e.is_normalized()


def test_sample_ks_and_determinism():
    d = GridDensity.constant(64)
    x = sample(d, 10**6, seed=42)
    assert stats.kstest(x, "uniform").statistic <= 2e-3
    assert np.array_equal(x, sample(d, 10**6, seed=42))
    assert not np.array_equal(x[:10], sample(d, 10, seed=43))


def test_sample_follows_density():
    d = GridDensity.trig(256, a=0.5)
    x = sample(d, 400_000, seed=1)
    cdf = lambda u: u + 0.5 * (1 - np.cos(2 * np.pi * u)) / (2 * np.pi)  # noqa: E731
    assert stats.kstest(x, cdf).statistic < 3e-3


def test_bv_distance_mixed_grids():
    a = GridDensity.trig(256, a=0.2)
    b = a.resample(512)
    assert bv_distance(a, b) < 1e-8
    # ||0.2 sin||_1 + var(0.2 sin) = 0.4/pi + 0.8; trapezoid kinks cost O(h^2)
    a = GridDensity.trig(1024, a=0.2)
    assert bv_distance(a, GridDensity.constant(1024)) == pytest.approx(0.4 / math.pi + 0.8, abs=1e-5)


def test_periodic_spline_requires_even():
    with pytest.raises(ValueError):
        PeriodicSpline(np.ones(7))
