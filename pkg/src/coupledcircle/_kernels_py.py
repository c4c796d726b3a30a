"""Pure numpy implementations of the hot kernels.

Signatures mirror ``_kernels.pyx`` exactly; ``coupledcircle.kernels``
picks one of the two at import time.

Spline conventions shared by both backends: ``coef`` has shape (4, M) and
cell ``i`` (covering [i/M, (i+1)/M)) carries the cubic
``c0 s^3 + c1 s^2 + c2 s + c3`` with ``s = t - i/M``.  ``P0``/``P1`` are
prefix sums (length M+1) of the per-cell integrals of f and t*f.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def set_num_threads(n: int) -> None:
    """No-op; the numpy backend is single-threaded."""


def _locate(t, M):
    k = np.floor(t)
    r = t - k
    i = np.minimum((r * M).astype(np.int64), M - 1)
    s = r - i / M
    return k, i, s


def _poly(coef, i, s):
    return ((coef[0, i] * s + coef[1, i]) * s + coef[2, i]) * s + coef[3, i]


def _partials(coef, i, s):
    a, b, c, d = coef[0, i], coef[1, i], coef[2, i], coef[3, i]
    s2 = s * s
    q0 = s * (d + s * (c / 2 + s * (b / 3 + s * a / 4)))
    q1 = s2 * (d / 2 + s * (c / 3 + s * (b / 4 + s * a / 5)))
    return q0, q1


def cumulative(t, coef, P0, P1, mass, mu1):
    """Lift antiderivatives C0(t) = int_0^t f and C1(t) = int_0^t u f(u) du."""
    t = np.asarray(t, dtype=float)
    M = coef.shape[1]
    k, i, s = _locate(t, M)
    q0, q1 = _partials(coef, i, s)
    i0 = P0[i] + q0
    j0 = P1[i] + (i / M) * q0 + q1
    c0 = k * mass + i0
    c1 = k * mu1 + mass * k * (k - 1) / 2 + j0 + k * i0
    return c0, c1


def displacement_at(x, coef, P0, P1, mass, mu1):
    """G(x) = int_{x-1/2}^{x+1/2} (t - x) f(t) dt on the lift."""
    x = np.asarray(x, dtype=float)
    a0, a1 = cumulative(x - 0.5, coef, P0, P1, mass, mu1)
    b0, b1 = cumulative(x + 0.5, coef, P0, P1, mass, mu1)
    return (b1 - a1) - x * (b0 - a0)


def spline_eval(t, coef):
    t = np.asarray(t, dtype=float)
    M = coef.shape[1]
    _, i, s = _locate(t, M)
    return _poly(coef, i, s)


def pair_displacements(x):
    """(1/N) sum_j g(x_j - x_i) for every i, by direct O(N^2) summation."""
    x = np.ascontiguousarray(x, dtype=float)
    n = x.size
    out = np.empty(n)
    chunk = max(1, 2_000_000 // max(n, 1))
    for lo in range(0, n, chunk):
        xi = x[lo:lo + chunk, None]
        u = x[None, :] - xi
        r = u - np.floor(u + 0.5)
        r[r == -0.5] = 0.0
        out[lo:lo + chunk] = r.sum(axis=1) / n
    return out


def node_displacement_direct(I0, I1):
    """G at the nodes j/M by summing exact cell moments over each window.

    O(M^2); the window of node j is exactly the M cells j-M/2 .. j+M/2-1.
    """
    I0 = np.asarray(I0, dtype=float)
    I1 = np.asarray(I1, dtype=float)
    M = I0.size
    half = M // 2
    out = np.empty(M)
    lidx = np.arange(M)
    for j in range(M):
        c = j - half + lidx
        i = np.mod(c, M)
        shift = np.floor_divide(c, M)
        xj = j / M
        out[j] = np.sum(I1[i] + (shift - xj) * I0[i])
    return out


def invert_phi(y, coef, P0, P1, mass, mu1, eps, tol, maxit):
    """Solve x + eps*G(x) = y on the lift by bracketed Newton.

    Returns ``(x, iterations)``; ``x`` is a lift value near ``y``.
    """
    shape = np.shape(y)
    y = np.asarray(y, dtype=float).ravel()
    lo = y - 0.5 * eps - 1e-12
    hi = y + 0.5 * eps + 1e-12
    x = y.copy()
    its = np.zeros(y.shape, dtype=np.int64)
    active = np.ones(y.shape, dtype=bool)
    for _ in range(maxit):
        if not active.any():
            break
        xa = x[active]
        G = displacement_at(xa, coef, P0, P1, mass, mu1)
        F = xa + eps * G - y[active]
        dF = 1.0 + eps * (spline_eval(xa + 0.5, coef) - mass)
        lo_a, hi_a = lo[active], hi[active]
        lo_a = np.where(F < 0, xa, lo_a)
        hi_a = np.where(F > 0, xa, hi_a)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xa - F / dF
        bad = ~np.isfinite(xn) | (xn <= lo_a) | (xn >= hi_a)
        xn = np.where(bad, 0.5 * (lo_a + hi_a), xn)
        done = (np.abs(xn - xa) <= tol) | (F == 0.0)
        x[active] = np.where(F == 0.0, xa, xn)
        lo[active], hi[active] = lo_a, hi_a
        its[active] += 1
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return x.reshape(shape), its.reshape(shape)


def invert_perturbed_linear(y, N, delta, tol, maxit):
    """All N preimages in [0, 1) of each y under x -> N x + delta sin(2 pi x).

    Returns an array of shape (len(y), N), sorted along axis 1.
    """
    y = np.asarray(y, dtype=float)
    tau = y[:, None] + np.arange(N)[None, :]  # lift(0) = 0
    two_pi = 2.0 * np.pi
    lo = np.zeros(tau.shape)
    hi = np.ones(tau.shape)
    x = tau / N
    active = np.ones(tau.shape, dtype=bool)
    for _ in range(maxit):
        if not active.any():
            break
        xa = x[active]
        F = N * xa + delta * np.sin(two_pi * xa) - tau[active]
        dF = N + two_pi * delta * np.cos(two_pi * xa)
        lo_a = np.where(F < 0, xa, lo[active])
        hi_a = np.where(F > 0, xa, hi[active])
        xn = xa - F / dF
        bad = (xn <= lo_a) | (xn >= hi_a)
        xn = np.where(bad, 0.5 * (lo_a + hi_a), xn)
        done = (np.abs(xn - xa) <= tol) | (F == 0.0)
        x[active] = np.where(F == 0.0, xa, xn)
        lo[active], hi[active] = lo_a, hi_a
        idx = np.flatnonzero(active)
        active.flat[idx[done]] = False
    return x
