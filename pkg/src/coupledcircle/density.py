"""Densities on the circle sampled on a uniform periodic grid.

A :class:`PeriodicSpline` interpolates node values ``f(j/M)`` by a periodic
cubic spline.  Integrals against 1 and t are evaluated exactly on the
spline through per-cell moments and their prefix sums, which gives O(1)
antiderivatives anywhere on the lift.  :class:`GridDensity` adds the
nonnegativity requirement and the density-specific functionals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .torus import Arc, wrap

MASS_TOL = 1e-10
SUPPORT_FLOOR = 1e-12


class SupportError(ValueError):
    """Support of a density is not contained in a proper arc."""


class PeriodicSpline:
    """Periodic cubic spline through ``values`` at the nodes ``j/M``.

    Cells whose four surrounding nodes are all below ``floor * max|f|`` are
    set to exactly zero.  This removes the spline's ringing inside long runs
    of zero nodes, so compactly supported data stays compactly supported.
    """

    def __init__(self, values, floor: float = SUPPORT_FLOOR):
        v = np.array(values, dtype=float)
        if v.ndim != 1 or v.size < 4 or v.size % 2:
            raise ValueError("need an even number (>= 4) of node values")
        if not np.all(np.isfinite(v)):
            raise ValueError("node values must be finite")
        v.setflags(write=False)
        self.values = v
        self.M = v.size
        self.h = 1.0 / self.M
        self.floor = floor
        self.coef = _spline_coefficients(v, floor)
        self._moments()

    def _moments(self):
        c = self.coef
        h = self.h
        a, b, cc, d = c[0], c[1], c[2], c[3]
        i0 = h * (d + h * (cc / 2 + h * (b / 3 + h * a / 4)))
        q1 = h * h * (d / 2 + h * (cc / 3 + h * (b / 4 + h * a / 5)))
        xi = np.arange(self.M) * h
        i1 = xi * i0 + q1
        self.cell_mass = i0
        self.cell_moment = i1
        self.P0 = np.concatenate([[0.0], np.cumsum(i0)])
        self.P1 = np.concatenate([[0.0], np.cumsum(i1)])
        self.mass = float(self.P0[-1])
        self.first_moment = float(self.P1[-1])

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.M) * self.h

    @property
    def node_derivatives(self) -> np.ndarray:
        return self.coef[2]

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = kernels.spline_eval(x, self.coef)
        if out.ndim == 0:
            return float(out)
        return out

    def evaluate_deriv(self, x):
        x = np.asarray(x, dtype=float)
        r = x - np.floor(x)
        i = np.minimum((r * self.M).astype(np.int64), self.M - 1)
        s = r - i * self.h
        c = self.coef
        out = (3 * c[0, i] * s + 2 * c[1, i]) * s + c[2, i]
        if out.ndim == 0:
            return float(out)
        return out

    def cumulative(self, t):
        """(int_0^t f, int_0^t u f(u) du) on the lift, exactly for the spline."""
        return kernels.cumulative(np.asarray(t, dtype=float), self.coef, self.P0, self.P1,
                                  self.mass, self.first_moment)

    def integral(self, a, b):
        """int_a^b f on the lift."""
        ca, _ = self.cumulative(a)
        cb, _ = self.cumulative(b)
        return cb - ca


def _spline_coefficients(v: np.ndarray, floor: float) -> np.ndarray:
    M = v.size
    x = np.arange(M + 1) / M
    cs = CubicSpline(x, np.append(v, v[0]), bc_type="periodic")
    coef = np.ascontiguousarray(cs.c, dtype=float)
    vmax = np.max(np.abs(v))
    if vmax == 0.0:
        return np.zeros_like(coef)
    small = np.abs(v) <= floor * vmax
    if small.any():
        dead = small & np.roll(small, 1) & np.roll(small, -1) & np.roll(small, -2)
        coef[:, dead] = 0.0
    return coef


@dataclass(frozen=True)
class NormReport:
    l1: float
    variation: float
    bv: float
    sup_deriv: float
    lip_deriv: float


@dataclass(frozen=True)
class MembershipSpec:
    """Bounds (R, S, c) on var(f), sup|f'| and Lip(f')."""

    R: float
    S: float
    c: float

    def __post_init__(self):
        if not (self.R > 0 and self.S > 0 and self.c > 0):
            raise ValueError("R, S, c must be positive")


@dataclass(frozen=True)
class Membership:
    member: bool
    margin_R: float
    margin_S: float
    margin_c: float
    inconclusive: bool

    @property
    def margins(self) -> tuple[float, float, float]:
        return (self.margin_R, self.margin_S, self.margin_c)


class GridDensity(PeriodicSpline):
    """A nonnegative C^1 density on the circle."""

    def __init__(self, values, floor: float = SUPPORT_FLOOR):
        v = np.asarray(values, dtype=float)
        M = v.size
        if M < 4 or M & (M - 1):
            raise ValueError(f"resolution {M} is not a power of two >= 4")
        if np.any(v < 0):
            raise ValueError("density values must be nonnegative")
        super().__init__(v, floor)

    # constructors ---------------------------------------------------------

    @classmethod
    def from_function(cls, fn, M: int, normalize: bool = True) -> "GridDensity":
        x = np.arange(M) / M
        d = cls(np.asarray(fn(x), dtype=float) * np.ones(M))
        return d.normalize() if normalize else d

    @classmethod
    def constant(cls, M: int) -> "GridDensity":
        return cls(np.ones(M))

    @classmethod
    def trig(cls, M: int, a: float = 0.0, b: float = 0.0, k: int = 1) -> "GridDensity":
        """1 + a sin(2 pi k x) + b cos(2 pi k x)."""
        if math.hypot(a, b) > 1.0:
            raise ValueError("trig density would be negative: need sqrt(a^2+b^2) <= 1")
        x = np.arange(M) / M
        return cls(1.0 + a * np.sin(2 * np.pi * k * x) + b * np.cos(2 * np.pi * k * x)).normalize()

    @classmethod
    def bump(cls, M: int, start: float, length: float) -> "GridDensity":
        """(1 + cos)^2 profile supported on the arc [start, start + length]."""
        if not 0.0 < length < 1.0:
            raise ValueError("bump length must lie in (0, 1)")
        r = 0.5 * length
        c = start + r
        x = np.arange(M) / M
        u = np.mod(x - c + 0.5, 1.0) - 0.5
        inside = np.abs(u) < r
        vals = np.where(inside, (1.0 + np.cos(np.pi * u / r)) ** 2, 0.0)
        if not vals.any():
            raise ValueError("bump narrower than the grid")
        return cls(vals).normalize()

    # basic functionals ----------------------------------------------------

    @property
    def quadrature_mass(self) -> float:
        return self.h * math.fsum(self.values)

    def is_normalized(self, tol: float = MASS_TOL) -> bool:
        return abs(self.quadrature_mass - 1.0) <= tol

    def normalize(self) -> "GridDensity":
        return normalize(self)

    def norms(self) -> NormReport:
        return norms(self)

    def support_arc(self, floor: float = SUPPORT_FLOOR) -> Arc:
        return support_arc(self, floor)

    def sample(self, n: int, seed: int) -> np.ndarray:
        return sample(self, n, seed)

    def resample(self, M: int) -> "GridDensity":
        x = np.arange(M) / M
        return GridDensity(np.maximum(self.evaluate(x), 0.0)).normalize()


def normalize(d: GridDensity) -> GridDensity:
    """Rescale so the trapezoidal mass is 1; a no-op within a few ulps."""
    m = d.quadrature_mass
    if not m > 0.0:
        raise ValueError("cannot normalize a density with zero mass")
    if abs(m - 1.0) <= 4e-16:
        return d
    return GridDensity(d.values / m, d.floor)


def norms(d: PeriodicSpline) -> NormReport:
    """L1, total variation (int |f'|), BV, sup|f'| and a Lip(f') proxy.

    Integrals use the trapezoidal rule on the nodes; derivatives come from
    the spline.  ``lip_deriv`` is the largest difference quotient of f' over
    one cell, a lower bound for the true Lipschitz constant.
    """
    h = d.h
    v = d.values
    dv = d.node_derivatives
    l1 = h * math.fsum(np.abs(v))
    var = h * math.fsum(np.abs(dv))
    return NormReport(
        l1=l1,
        variation=var,
        bv=l1 + var,
        sup_deriv=float(np.max(np.abs(dv))),
        lip_deriv=float(np.max(np.abs(np.roll(dv, -1) - dv)) / h),
    )


def bv_distance(a: PeriodicSpline, b: PeriodicSpline) -> float:
    """||a - b||_BV, compared on the coarser of the two grids."""
    if a.M == b.M:
        va, vb = a.values, b.values
        da, db = a.node_derivatives, b.node_derivatives
        h = a.h
    else:
        M = min(a.M, b.M)
        x = np.arange(M) / M
        va, vb = a.evaluate(x), b.evaluate(x)
        da, db = a.evaluate_deriv(x), b.evaluate_deriv(x)
        h = 1.0 / M
    return h * math.fsum(np.abs(va - vb)) + h * math.fsum(np.abs(da - db))


def check_membership(d: GridDensity, spec: MembershipSpec, rel_tol: float = 1e-6) -> Membership:
    """Test var <= R, sup|f'| <= S, Lip(f') <= c with signed margins.

    A margin within ``rel_tol`` of zero is flagged as inconclusive, since the
    grid functionals only approximate the exact ones.
    """
    n = norms(d)
    mR, mS, mc = spec.R - n.variation, spec.S - n.sup_deriv, spec.c - n.lip_deriv
    inconclusive = any(abs(m) <= rel_tol * max(1.0, s) for m, s in ((mR, spec.R), (mS, spec.S), (mc, spec.c)))
    return Membership(mR >= 0 and mS >= 0 and mc >= 0, mR, mS, mc, inconclusive)


def support_arc(d: PeriodicSpline, floor: float = SUPPORT_FLOOR) -> Arc:
    """Smallest arc holding every node above ``floor * max f``, padded by one cell per side."""
    v = d.values
    vmax = float(np.max(v))
    if not vmax > 0:
        raise SupportError("density vanishes identically")
    above = v > floor * vmax
    if above.all():
        raise SupportError("support not proper: density is positive on the whole circle")
    M = d.M
    # rotate so index 0 is below threshold; then runs do not wrap
    z = int(np.flatnonzero(~above)[0])
    rolled = np.roll(above, -z)
    idx = np.flatnonzero(rolled)
    # gaps between consecutive above-threshold nodes (circularly)
    gaps = np.diff(np.concatenate([idx, [idx[0] + M]]))
    k = int(np.argmax(gaps))
    first = idx[(k + 1) % idx.size]
    last = idx[k]
    span = (last - first) % M
    length = (span + 2) * d.h
    if length >= 1.0:
        raise SupportError("support not proper: padded hull covers the circle")
    return Arc(((first - 1 + z) % M) * d.h, length)


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    """Midpoint of the lower and upper weighted medians.

    Taking the midpoint makes the choice commute with negation, so the
    circular W1 below is exactly symmetric in its two arguments.
    """
    order = np.argsort(values, kind="stable")
    v = values[order]
    cw = np.cumsum(weights[order])
    half = 0.5 * cw[-1]
    lo = v[min(int(np.searchsorted(cw, half, side="left")), v.size - 1)]
    hi = v[min(int(np.searchsorted(cw, half, side="right")), v.size - 1)]
    return float(0.5 * (lo + hi))


def _circular_w1(D: np.ndarray, w: np.ndarray) -> float:
    """min_a sum w |D - a|; the minimizer is a weighted median of D."""
    a = _weighted_median(D, w)
    return math.fsum(w * np.abs(D - a))


def wasserstein1(d: PeriodicSpline, e: PeriodicSpline, oversample: int = 8) -> float:
    """Circular W1 between two densities from their CDF difference.

    The CDFs are exact spline antiderivatives sampled at the midpoints of a
    grid ``oversample`` times finer than the finer input.
    """
    K = oversample * max(d.M, e.M)
    t = (np.arange(K) + 0.5) / K
    Fd, _ = d.cumulative(t)
    Fe, _ = e.cumulative(t)
    D = Fd / d.mass - Fe / e.mass
    return _circular_w1(D, np.full(K, 1.0 / K))


def wasserstein_to_dirac(d: PeriodicSpline, x: float) -> float:
    """W1 between d and the point mass at x.

    Every coupling with a Dirac is the product coupling, so this equals
    int circ_dist(t, x) f(t) dt, evaluated exactly on the spline.
    """
    x = float(x)
    c_lo0, c_lo1 = d.cumulative(x - 0.5)
    c_mid0, c_mid1 = d.cumulative(x)
    c_hi0, c_hi1 = d.cumulative(x + 0.5)
    right = (c_hi1 - c_mid1) - x * (c_hi0 - c_mid0)
    left = (c_mid1 - c_lo1) - x * (c_mid0 - c_lo0)
    return float((right - left) / d.mass)


def wasserstein_empirical(points, d: PeriodicSpline, oversample: int = 8) -> float:
    """Circular W1 between the empirical measure of ``points`` and density ``d``."""
    p = np.sort(wrap(np.asarray(points, dtype=float)))
    n = p.size
    K = oversample * d.M
    breaks = np.unique(np.concatenate([[0.0, 1.0], np.arange(1, K) / K, p]))
    w = np.diff(breaks)
    mid = 0.5 * (breaks[:-1] + breaks[1:])
    keep = w > 0
    w, mid = w[keep], mid[keep]
    Femp = np.searchsorted(p, mid, side="right") / n
    Fd, _ = d.cumulative(mid)
    return _circular_w1(Femp - Fd / d.mass, w)


def sample(d: GridDensity, n: int, seed: int) -> np.ndarray:
    """n i.i.d. points from d by inverting the exact spline CDF.

    Uses a Philox (counter-based) generator, so draws are reproducible from
    ``seed`` alone.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random(n) * d.mass
    i = np.clip(np.searchsorted(d.P0, u, side="right") - 1, 0, d.M - 1)
    target = u - d.P0[i]
    c = d.coef
    a, b, cc, dd = c[0, i], c[1, i], c[2, i], c[3, i]
    lo = np.zeros(n)
    hi = np.full(n, d.h)
    for _ in range(52):
        s = 0.5 * (lo + hi)
        q = s * (dd + s * (cc / 2 + s * (b / 3 + s * a / 4)))
        below = q < target
        lo = np.where(below, s, lo)
        hi = np.where(below, hi, s)
    return wrap(i * d.h + 0.5 * (lo + hi))
