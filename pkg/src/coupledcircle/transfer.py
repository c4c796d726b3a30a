"""The self-consistent transfer operator f -> P_T P_Phi_f f and its fixed points."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .coupling import CouplingField
from .density import GridDensity, PeriodicSpline, bv_distance, norms
from .maps import ExpandingMap, inverse_branches

log = logging.getLogger(__name__)


@dataclass
class BranchData:
    """Preimages of the nodes under F = T o Phi, one column per branch."""

    field: CouplingField
    z: np.ndarray  # T-preimages, shape (M, N)
    x: np.ndarray  # Phi^{-1}(z) on the lift
    T1: np.ndarray  # T'(z)
    phi1: np.ndarray  # Phi'(x)

    @property
    def F1(self) -> np.ndarray:
        return self.T1 * self.phi1


def branch_data(field_: CouplingField, T: ExpandingMap, y: np.ndarray | None = None) -> BranchData:
    if y is None:
        y = field_.source.nodes
    z = inverse_branches(T, np.asarray(y, dtype=float))
    x = field_.phi_inverse_lift(z)
    return BranchData(field_, z, x, T.d1(z), field_.phi_prime(x))


def transfer_values(bd: BranchData, g: PeriodicSpline) -> np.ndarray:
    """(P_F g)(y) = sum_k g(x_k) / F'(x_k) at the points behind ``bd``."""
    return np.sum(g.evaluate(bd.x) / bd.F1, axis=1)


def _finish(values: np.ndarray, renormalize: bool) -> GridDensity:
    values = np.maximum(values, 0.0)  # spline undershoot near zero runs
    d = GridDensity(values)
    return d.normalize() if renormalize else d


def pushforward_T(T: ExpandingMap, d: GridDensity, renormalize: bool = True) -> GridDensity:
    """P_T f(y) = sum over T(x) = y of f(x) / T'(x)."""
    z = inverse_branches(T, d.nodes)
    return _finish(np.sum(d.evaluate(z) / T.d1(z), axis=1), renormalize)


def pushforward_phi(field_: CouplingField, d: GridDensity, renormalize: bool = False) -> GridDensity:
    """P_Phi f(y) = f(Phi^{-1} y) / Phi'(Phi^{-1} y)."""
    x = field_.phi_inverse_lift(d.nodes)
    return _finish(d.evaluate(x) / field_.phi_prime(x), renormalize)


def step(eps: float, d: GridDensity, T: ExpandingMap, renormalize: bool = True,
         return_field: bool = False):
    """One application of the self-consistent operator.

    The two pushforwards are composed pointwise through the preimage chain
    y <- z = T^{-1,k}(y) <- x = Phi^{-1}(z), so no intermediate density is
    interpolated.
    """
    field_ = CouplingField(eps, d)
    bd = branch_data(field_, T)
    out = _finish(transfer_values(bd, d), renormalize)
    if return_field:
        return out, field_
    return out


def image_derivative_formula(eps: float, d: GridDensity, T: ExpandingMap) -> np.ndarray:
    """Derivative of the image density at the nodes from the branch sums.

    sum_k f'/F'^2 - sum_k f F''/F'^3 at x_k = F^{-1,k}(y), with
    F' = T'(Phi) Phi' and F'' = T''(Phi) Phi'^2 + T'(Phi) Phi''.
    The output is scaled by the same mass correction as :func:`step`.
    """
    field_ = CouplingField(eps, d)
    bd = branch_data(field_, T)
    x = bd.x
    p1 = bd.phi1
    p2 = field_.phi_second(x)
    F1 = bd.T1 * p1
    F2 = T.d2(bd.z) * p1**2 + bd.T1 * p2
    fx = d.evaluate(x)
    dfx = d.evaluate_deriv(x)
    deriv = np.sum(dfx / F1**2, axis=1) - np.sum(fx * F2 / F1**3, axis=1)
    raw = np.maximum(np.sum(fx / F1, axis=1), 0.0)
    mass = d.h * math.fsum(raw)
    return deriv / mass


@dataclass
class FixedPointReport:
    iterations: int
    bv_distances: list[float]
    residual: float
    gamma_est: float | None
    converged: bool
    eps: float
    tol: float

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "gamma_est": self.gamma_est,
            "converged": self.converged,
            "eps": self.eps,
            "tol": self.tol,
            "bv_distances": list(self.bv_distances),
        }


def estimate_rate(distances) -> float | None:
    """exp of the least-squares slope of log distance over the last half of the run."""
    d = np.asarray(distances, dtype=float)
    d = d[d > 0]
    if d.size < 2:
        return None
    tail = d[d.size // 2:] if d.size >= 4 else d
    if tail.size < 2:
        return None
    k = np.arange(tail.size)
    slope = np.polyfit(k, np.log(tail), 1)[0]
    return float(np.exp(slope))


def fixed_point(eps: float, d0: GridDensity, T: ExpandingMap, tol: float = 1e-10,
                max_iter: int = 500) -> tuple[GridDensity, FixedPointReport]:
    """Iterate the operator until successive iterates are ``tol``-close in BV."""
    f = d0.normalize()
    dists: list[float] = []
    converged = False
    for _ in range(max_iter):
        g = step(eps, f, T)
        dist = bv_distance(g, f)
        dists.append(dist)
        f = g
        if dist < tol:
            converged = True
            break
    residual = bv_distance(step(eps, f, T), f)
    gamma = estimate_rate(dists)
    log.debug("fixed_point eps=%g: %d iterations, residual %.3g", eps, len(dists), residual)
    return f, FixedPointReport(len(dists), dists, residual, gamma, converged, float(eps), tol)


@dataclass
class SweepReport:
    eps_grid: list[float]
    fixed_densities: list[GridDensity]
    reports: list[FixedPointReport]
    ratios: list[float | None]
    K_est: float | None
    cold_check: float | None = None
    flagged: list[int] = field(default_factory=list)

    def rows(self):
        for i, e in enumerate(self.eps_grid):
            r = self.reports[i]
            ratio = self.ratios[i - 1] if i > 0 else None
            yield e, r.residual, r.gamma_est, ratio


def sweep_epsilon(eps_grid, d0: GridDensity, T: ExpandingMap, tol: float = 1e-10,
                  max_iter: int = 500, cold_check: bool = True) -> SweepReport:
    """Fixed points along an increasing eps grid, warm-started from the previous one.

    ``ratios[i]`` is ||f*(eps[i+1]) - f*(eps[i])||_BV / (eps[i+1] - eps[i]),
    or None when either endpoint failed to converge.  When ``cold_check`` is
    set the last cell is recomputed from ``d0`` and the BV gap is recorded.
    """
    grid = [float(e) for e in eps_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("eps grid must be strictly increasing")
    densities, reports = [], []
    f = d0
    for e in grid:
        f, rep = fixed_point(e, f, T, tol, max_iter)
        densities.append(f)
        reports.append(rep)
    flagged = [i for i, r in enumerate(reports) if not r.converged]
    ratios: list[float | None] = []
    for i in range(len(grid) - 1):
        if i in flagged or i + 1 in flagged:
            ratios.append(None)
        else:
            ratios.append(bv_distance(densities[i + 1], densities[i]) / (grid[i + 1] - grid[i]))
    finite = [r for r in ratios if r is not None]
    K = max(finite) if finite else None
    cold = None
    if cold_check and len(grid) > 1:
        fc, _ = fixed_point(grid[-1], d0, T, tol, max_iter)
        cold = bv_distance(fc, densities[-1])
    return SweepReport(grid, densities, reports, ratios, K, cold, flagged)


@dataclass(frozen=True)
class LasotaYorkeResult:
    lhs: float
    rhs: float
    alpha: float
    d_tilde: float
    k0: float
    u_bv: float
    u_l1: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def lasota_yorke_check(T: ExpandingMap, eps: float, d: GridDensity, u: PeriodicSpline,
                       slack: float = 1e-6) -> LasotaYorkeResult:
    """Compare ||P_F u||_BV with alpha ||u||_BV + (1 + D~) ||u||_1.

    alpha = 1 / (omega (1 - eps)) and D~ = max |F''| / F'^2, which equals the
    largest |(F^{-1})'' / (F^{-1})'| over all inverse branches, sampled on
    a grid four times finer than ``d``.
    """
    field_ = CouplingField(eps, d)
    bd = branch_data(field_, T, u.nodes)
    Pu = PeriodicSpline(transfer_values(bd, u))
    lhs = norms(Pu).bv
    xs = np.arange(4 * d.M) / (4 * d.M)
    phi = field_.phi_lift(xs)
    p1 = field_.phi_prime(xs)
    F1 = T.d1(phi) * p1
    F2 = T.d2(phi) * p1**2 + T.d1(phi) * field_.phi_second(xs)
    d_tilde = float(np.max(np.abs(F2) / F1**2))
    alpha = 1.0 / (T.omega * (1.0 - eps))
    un = norms(u)
    rhs = alpha * un.bv + (1.0 + d_tilde) * un.l1
    k0 = (1.0 + d_tilde) / (1.0 - alpha) if alpha < 1 else math.inf
    return LasotaYorkeResult(lhs, rhs, alpha, d_tilde, k0, un.bv, un.l1, lhs <= rhs + slack)
