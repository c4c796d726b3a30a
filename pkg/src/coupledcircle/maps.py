"""Expanding circle maps T: lift, derivatives, inverse branches, validation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .torus import circ_dist, wrap

ROOT_TOL = 1e-14
SCAN_RESOLUTION = 2**16


class InvalidMapError(ValueError):
    """The map violates the expansion assumption (omega > 1 and N < omega**2)."""


@dataclass(frozen=True)
class ExpandingMap:
    """An orientation-preserving C^2 expanding N-fold covering of the circle.

    ``lift`` satisfies ``lift(x + 1) == lift(x) + degree``.  The scalar
    bounds are min T', max T', max |T''| and a Lipschitz bound for T''.
    """

    lift: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    degree: int
    omega: float
    Omega: float
    Dmax: float
    lip_d2: float
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        """T(x) as a point of [0, 1)."""
        return wrap(self.lift(np.asarray(x, dtype=float)))

    def iterate(self, x: float, n: int) -> float:
        for _ in range(n):
            x = wrap(float(self.lift(x)))
        return x

    def inverse_branches(self, y):
        return inverse_branches(self, y)


def make_perturbed_linear(N: int, delta: float, check: bool = True) -> ExpandingMap:
    """T(x) = N x + delta sin(2 pi x).

    Raises InvalidMapError if the map is not expanding enough, unless
    ``check`` is False (used to build counterexamples for ``validate``).
    """
    N = int(N)
    delta = float(delta)
    if N < 2:
        raise InvalidMapError(f"degree N={N} must be >= 2")
    two_pi = 2.0 * math.pi
    omega = N - two_pi * abs(delta)
    if check and not omega > 1.0:
        raise InvalidMapError(f"omega > 1 fails: omega = N - 2*pi*|delta| = {omega:.6g}")
    if check and not N < omega**2:
        raise InvalidMapError(f"N < omega^2 fails: N = {N}, omega^2 = {omega**2:.6g}")

    def lift(x):
        return N * x + delta * np.sin(two_pi * x)

    def d1(x):
        return N + two_pi * delta * np.cos(two_pi * x)

    def d2(x):
        return -(two_pi**2) * delta * np.sin(two_pi * x)

    return ExpandingMap(
        lift=lift,
        d1=d1,
        d2=d2,
        degree=N,
        omega=omega,
        Omega=N + two_pi * abs(delta),
        Dmax=two_pi**2 * abs(delta),
        lip_d2=two_pi**3 * abs(delta),
        kind="perturbed_linear",
        params={"degree": N, "delta": delta},
    )


def doubling() -> ExpandingMap:
    return make_perturbed_linear(2, 0.0)


def from_callables(lift, d1, d2, degree: int, resolution: int = SCAN_RESOLUTION) -> ExpandingMap:
    """Wrap a user-supplied lift, measuring the bounds on a uniform scan."""
    x = np.arange(resolution) / resolution
    t1 = np.asarray(d1(x), dtype=float)
    t2 = np.asarray(d2(x), dtype=float)
    h = 1.0 / resolution
    lip = float(np.max(np.abs(np.diff(np.append(t2, t2[0])))) / h)
    return ExpandingMap(
        lift=lift,
        d1=d1,
        d2=d2,
        degree=int(degree),
        omega=float(np.min(np.abs(t1))),
        Omega=float(np.max(np.abs(t1))),
        Dmax=float(np.max(np.abs(t2))),
        lip_d2=lip,
        kind="custom",
    )


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [{"name": c.name, "passed": c.passed, "margin": c.margin} for c in self.checks],
        }


def validate(T: ExpandingMap, resolution: int = SCAN_RESOLUTION) -> ValidationReport:
    """Check the expansion assumption on T; failures are reported, never raised."""
    x = np.arange(resolution) / resolution
    h = 1.0 / resolution
    t1 = np.asarray(T.d1(x), dtype=float)
    t2 = np.asarray(T.d2(x), dtype=float)
    omega_scan = float(np.min(t1))
    omega = min(T.omega, omega_scan)
    degree_err = float(np.max(np.abs(T.lift(x + 1.0) - T.lift(x) - T.degree)))
    lip_scan = float(np.max(np.abs(np.diff(np.append(t2, t2[0])))) / h)
    checks = (
        Check("omega > 1", omega > 1.0, omega - 1.0),
        Check("N < omega^2", T.degree < omega**2, omega**2 - T.degree),
        Check("degree consistency", degree_err <= 1e-9, 1e-9 - degree_err),
        Check("orientation preserving", omega_scan > 0.0, omega_scan),
        # finite differences underestimate the true constant by O(h)
        Check("T'' Lipschitz (sampled)", lip_scan <= T.lip_d2 * (1 + 1e-6) + 1e-9, T.lip_d2 - lip_scan),
    )
    return ValidationReport(checks)


def _invert_generic(T: ExpandingMap, y: np.ndarray, tol: float, maxit: int = 200) -> np.ndarray:
    """Bracketed Newton on the monotone lift, vectorized over targets."""
    N = T.degree
    L0 = float(T.lift(0.0))
    base = y + np.ceil(L0 - y)
    tau = base[:, None] + np.arange(N)[None, :]
    lo = np.zeros(tau.shape)
    hi = np.ones(tau.shape)
    x = (tau - L0) / N
    for _ in range(maxit):
        F = T.lift(x) - tau
        dF = T.d1(x)
        lo = np.where(F < 0, x, lo)
        hi = np.where(F > 0, x, hi)
        xn = x - F / dF
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        xn = np.where(F == 0.0, x, xn)
        step = np.max(np.abs(xn - x)) if x.size else 0.0
        x = xn
        if step <= tol:
            break
    else:
        raise RuntimeError("inverse branch iteration did not converge")
    return x


def inverse_branches(T: ExpandingMap, y, tol: float = ROOT_TOL) -> np.ndarray:
    """The N preimages of ``y`` in [0, 1), sorted ascending.

    For scalar ``y`` returns shape (N,); for an array of length m returns
    shape (m, N).
    """
    ya = np.atleast_1d(wrap(np.asarray(y, dtype=float))).astype(float)
    if T.kind == "perturbed_linear":
        x = kernels.invert_perturbed_linear(ya, T.degree, T.params["delta"], tol, 200)
    else:
        x = _invert_generic(T, ya, tol)
    x = np.where(x >= 1.0, x - 1.0, x)
    x = np.where(x < 0.0, x + 1.0, x)
    x = np.sort(x, axis=1)
    if np.ndim(y) == 0:
        return x[0]
    return x


def max_branch_residual(T: ExpandingMap, y, xs) -> float:
    """Largest circular distance between T(x) and y over returned preimages."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    xs = np.atleast_2d(xs)
    return float(np.max(circ_dist(T(xs), y[:, None])))
