import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from coupledcircle.coupling import CouplingField, NotADiffeomorphism, displacement, node_displacements
from coupledcircle.density import GridDensity, PeriodicSpline, norms
from coupledcircle.torus import circ_dist, kernel_g


def sin_density(M=1024, a=0.2):
    return GridDensity.trig(M, a=a)


def test_displacement_constant_is_zero():
    d = GridDensity.constant(256)
    assert np.max(np.abs(node_displacements(d))) < 1e-15
    assert abs(displacement(d, 0.123)) < 1e-15


def test_displacement_sin_value():
    # oracle: adaptive quadrature of the analytic integrand over the lift window
    ref, _ = quad(lambda t: t * (1 + 0.2 * np.sin(2 * np.pi * t)), -0.5, 0.5, epsabs=1e-14)
    assert ref == pytest.approx(0.1 / math.pi, abs=1e-12)
    assert displacement(sin_density(), 0.0) == pytest.approx(ref, abs=1e-9)


@given(st.floats(0, 1, exclude_max=True))
def test_displacement_against_quad(x):
    d = GridDensity.trig(1024, a=0.3, b=-0.1, k=2)
    f = lambda t: 1 + 0.3 * np.sin(4 * np.pi * t) - 0.1 * np.cos(4 * np.pi * t)  # noqa: E731
    ref, _ = quad(lambda t: kernel_g(t - x) * f(t), x - 0.5, x + 0.5, epsabs=1e-13, limit=200)
    assert displacement(d, x) == pytest.approx(ref, abs=1e-9)


def test_narrow_bump_limit():
    # a symmetric bump of any width pulls exactly like a point mass at its centre;
    # widths stay >= 64 cells so the spline resolves the profile
    M, m = 8192, 0.6
    for k in range(3, 8):
        r = 2.0**-k
        d = GridDensity.bump(M, m - r / 2, r)
        for x in (0.3, 0.5, 0.85, 0.15 + r):
            if circ_dist(x, m) < 0.5 - r:
                assert displacement(d, x) == pytest.approx(kernel_g(m - x), abs=1e-9)


def test_direct_and_prefix_paths_agree():
    rng = np.random.default_rng(7)
    for M in (64, 512, 2048):
        d = GridDensity(rng.random(M) + 0.1).normalize()
        a = node_displacements(d, "direct")
        b = node_displacements(d, "prefix")
        assert np.max(np.abs(a - b)) <= 1e-10
    with pytest.raises(ValueError):
        node_displacements(d, "fft")


def test_phi_examples():
    fld = CouplingField(0.3, GridDensity.constant(128))
    x = np.random.default_rng(0).random(20)
    assert np.allclose(fld.phi(x), x, atol=1e-15)
    assert np.allclose(fld.phi_prime(x), 1.0) and np.allclose(fld.phi_second(x), 0.0, atol=1e-12)
    zero = CouplingField(0.0, sin_density())
    assert np.array_equal(zero.phi(x), x)
    fld = CouplingField(0.1, sin_density())
    assert fld.phi(0.0) == pytest.approx(0.01 / math.pi, abs=1e-10)


def test_phi_prime_example_and_fd():
    fld = CouplingField(0.1, sin_density())
    assert fld.phi_prime(0.25) == pytest.approx(0.98, abs=1e-10)
    h = 1e-5
    fd = (fld.phi_lift(0.25 + h) - fld.phi_lift(0.25 - h)) / (2 * h)
    assert fd == pytest.approx(0.98, abs=1e-6)
    fd2 = (fld.phi_prime(0.25 + h) - fld.phi_prime(0.25 - h)) / (2 * h)
    assert fd2 == pytest.approx(fld.phi_second(0.25), abs=1e-6)


@given(st.integers(0, 10**6), st.sampled_from([0.05, 0.5, 0.9]))
def test_phi_second_bounded(seed, eps):
    rng = np.random.default_rng(seed)
    d = GridDensity.trig(512, *rng.uniform(-0.3, 0.3, 2), k=int(rng.integers(1, 4)))
    S = norms(d).sup_deriv
    fld = CouplingField(eps, d)
    assert np.max(np.abs(fld.phi_second(d.nodes))) <= eps * S + 1e-12


@given(st.integers(0, 10**6))
def test_field_invariants(seed):
    rng = np.random.default_rng(seed)
    d = GridDensity.trig(256, *rng.uniform(-0.45, 0.45, 2), k=int(rng.integers(1, 5)))
    eps = float(rng.uniform(0, 0.99))
    fld = CouplingField(eps, d)
    x = rng.random(50)
    # lift identity and kernel bound
    assert np.allclose(fld.phi_lift(x + 1), fld.phi_lift(x) + 1, atol=1e-12)
    assert np.max(np.abs(fld.G(x))) <= 0.5
    # lower bound 1 + eps (inf f - 1)
    grid = np.arange(4096) / 4096
    x0 = grid[np.argmin(d.evaluate(grid))]
    # refine the grid minimum; a bare grid minimum overestimates inf f by ~h^2 f''/8
    inf_f = minimize_scalar(lambda t: float(d.evaluate(t)), bounds=(x0 - 1 / 4096, x0 + 1 / 4096),
                            method="bounded", options={"xatol": 1e-12}).fun
    assert np.min(fld.phi_prime(x)) >= 1 + eps * (inf_f - 1) - 1e-9
    # bijection
    assert np.max(circ_dist(fld.phi_inverse(fld.phi(x)), x)) <= 1e-12
    y = rng.random(50)
    assert np.max(circ_dist(fld.phi(fld.phi_inverse(y)), y)) <= 1e-13


def test_bump_inverse_strong_coupling():
    d = GridDensity.bump(4096, 0.3, 0.4)
    fld = CouplingField(0.8, d)
    # f vanishes at 0.5 + 1/2, so Phi' = 1 - eps there
    assert fld.phi_prime(0.5) == pytest.approx(0.2, abs=1e-9)
    y = np.linspace(0, 1, 257)
    x = fld.phi_inverse(y)
    assert fld.last_inverse_iterations < 60
    assert np.max(circ_dist(fld.phi(x), y)) <= 1e-13


def test_not_a_diffeomorphism():
    # a signed profile can make Phi' negative; densities never do
    v = np.ones(64)
    v[:8] = 40.0
    s = PeriodicSpline(v - 5.0)
    with pytest.raises(NotADiffeomorphism, match="not admissible"):
        CouplingField(0.9, s)
    with pytest.raises(ValueError):
        CouplingField(1.0, GridDensity.constant(16))


def test_closed_form_against_fd_second_order():
    d = GridDensity.trig(1024, a=0.25, b=0.1, k=2)
    errs = []
    for M in (512, 1024):
        dd = d.resample(M)
        fld = CouplingField(0.5, dd)
        phi = dd.nodes + 0.5 * fld.displacement
        fd = (np.roll(phi, -1) - np.roll(phi, 1) + np.r_[np.zeros(M - 1), 1.0] + np.r_[1.0, np.zeros(M - 1)]) * M / 2
        errs.append(np.max(np.abs(fd - fld.node_phi_prime)))
    assert errs[1] < errs[0] / 3.5
