"""Strong coupling: support collapse onto a moving point mass.

For eps > 1 - 1/Omega and a density vanishing on an arc of length >= 1/2,
the smallest arc supp* holding the support shrinks by at least
q = Omega (1 - eps) per step, and the measure approaches the Dirac mass
at T^n(x*) for a single anchor x* determined by the whole history.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .coupling import CouplingField
from .density import SUPPORT_FLOOR, GridDensity, SupportError, support_arc, wasserstein_to_dirac
from .maps import ExpandingMap, inverse_branches
from .torus import Arc, arc_contains, circ_dist, wrap
from .transfer import step

log = logging.getLogger(__name__)

MIN_CELLS = 8


class HypothesisError(ValueError):
    """The strong-coupling hypothesis eps > 1 - 1/Omega does not hold."""


class BranchAmbiguity(RuntimeError):
    """Zero or several T-preimages fall inside a recorded support arc."""


@dataclass
class SyncHistory:
    """Densities and support arcs along a strong-coupling run.

    ``coupling_fields[k]`` is the coupling map built from ``densities[k]``,
    i.e. the one that produced ``densities[k + 1]``.
    """

    eps: float
    Omega: float
    densities: list[GridDensity]
    support_arcs: list[Arc]
    coupling_fields: list[CouplingField] = field(default_factory=list)
    stop_reason: str = ""
    xstar: float | None = None
    w1_series: list[float] = field(default_factory=list)

    @property
    def q(self) -> float:
        return self.Omega * (1.0 - self.eps)

    @property
    def M(self) -> int:
        return self.densities[0].M

    @property
    def steps(self) -> int:
        return len(self.densities) - 1

    @property
    def support_lengths(self) -> np.ndarray:
        return np.array([a.length for a in self.support_arcs])

    def contraction_slack(self, cells: float = 4.0) -> np.ndarray:
        """(q^n |supp*_0| + cells/M) - |supp*_n| per step; nonnegative when the bound holds."""
        L = self.support_lengths
        n = np.arange(L.size)
        return self.q**n * L[0] + cells / self.M - L

    def rows(self):
        """(n, support_start, support_length, w1_to_dirac, bound_qn) per step."""
        w0 = self.w1_series[0] if self.w1_series else math.nan
        for n, a in enumerate(self.support_arcs):
            w = self.w1_series[n] if n < len(self.w1_series) else math.nan
            yield n, a.start, a.length, w, self.q**n * w0


def check_hypothesis(eps: float, T: ExpandingMap) -> None:
    threshold = 1.0 - 1.0 / T.Omega
    if not eps > threshold:
        raise HypothesisError(
            f"hypothesis violated: requires ε > 1 − 1/Ω = {threshold:g} (got ε = {eps:g})"
        )
    if not eps < 1.0:
        raise HypothesisError(f"hypothesis violated: requires ε < 1 (got ε = {eps:g})")


def evolve_tracking(eps: float, d0: GridDensity, T: ExpandingMap, n: int,
                    floor: float = SUPPORT_FLOOR, min_cells: int = MIN_CELLS) -> SyncHistory:
    """Apply the operator up to ``n`` times, recording supp* after each step.

    Stops early once the support arc is shorter than ``min_cells`` grid
    cells; past that point the density is not resolved by the grid.  The
    last recorded arc is the first one below the floor.

    Raises
    ------
    HypothesisError
        If eps <= 1 - 1/Omega.
    SupportError
        If supp*(d0) is not a proper arc of length < 1/2.
    """
    eps = float(eps)
    check_hypothesis(eps, T)
    arc = support_arc(d0, floor)
    if not arc.length < 0.5:
        raise SupportError(f"support not proper: |supp*(f0)| = {arc.length:.6g} is not < 1/2")
    f = d0.normalize()
    hist = SyncHistory(eps, T.Omega, [f], [arc])
    floor_len = min_cells / d0.M
    if arc.length < floor_len:
        hist.stop_reason = "initial support below resolution floor"
        return hist
    for k in range(n):
        g, fld = step(eps, f, T, return_field=True)
        arc = support_arc(g, floor)
        hist.coupling_fields.append(fld)
        hist.densities.append(g)
        hist.support_arcs.append(arc)
        f = g
        log.debug("step %d: supp* start %.6f length %.3e", k + 1, arc.start, arc.length)
        if arc.length < floor_len:
            hist.stop_reason = f"resolution floor ({min_cells} cells) reached after {k + 1} steps"
            break
    else:
        hist.stop_reason = f"completed {n} steps"
    return hist


def reconstruct_xstar(history: SyncHistory, T: ExpandingMap, upto: int | None = None,
                      tol_cells: float = 1.0) -> float:
    """Anchor point x* whose T-orbit stays inside the recorded supports.

    Starts from the midpoint of supp*(f_n), n = ``upto`` (default: last
    step), and walks back: at step k the T-preimage lying in supp*(f_k) is
    kept.  Since supp*(f_{k+1}) is inside T(supp*(f_k)) such a preimage
    exists, and it is unique while arcs are shorter than the branch
    spacing.

    Raises
    ------
    BranchAmbiguity
        If no preimage, or more than one, lies in a recorded arc.
    """
    arcs = history.support_arcs
    n = len(arcs) - 1 if upto is None else int(upto)
    if not 0 <= n < len(arcs):
        raise ValueError(f"upto={upto} outside the recorded history")
    if n > 0 and not arcs[n].length < arcs[0].length:
        raise ValueError("final support is not shorter than the initial one")
    tol = tol_cells / history.M
    y = arcs[n].midpoint
    for k in range(n - 1, -1, -1):
        cands = inverse_branches(T, y)
        inside = cands[arc_contains(arcs[k], cands, tol)]
        if inside.size != 1:
            raise BranchAmbiguity(
                f"branch ambiguity at step {k}: {inside.size} preimages of {y:.6f} "
                f"lie in supp* [{arcs[k].start:.6f}, +{arcs[k].length:.3e}]"
            )
        y = float(inside[0])
    return y


def anchor_orbit(xstar: float, T: ExpandingMap, n: int) -> np.ndarray:
    """x*, T(x*), ..., T^n(x*)."""
    out = np.empty(n + 1)
    x = float(xstar)
    for k in range(n + 1):
        out[k] = x
        x = wrap(float(T.lift(x)))
    return out


def orbit_offsets(history: SyncHistory, xstar: float, T: ExpandingMap) -> np.ndarray:
    """Distance from T^k(x*) to supp*(f_k), zero when inside."""
    orbit = anchor_orbit(xstar, T, history.steps)
    out = np.empty(orbit.size)
    for k, (x, a) in enumerate(zip(orbit, history.support_arcs)):
        if arc_contains(a, x):
            out[k] = 0.0
        else:
            out[k] = min(circ_dist(x, a.start), circ_dist(x, a.end))
    return out


def wasserstein_trajectory(history: SyncHistory, xstar: float, T: ExpandingMap) -> list[float]:
    """W1(f_n, delta at T^n(x*)) for every recorded n; also stored on ``history``."""
    orbit = anchor_orbit(xstar, T, history.steps)
    series = [wasserstein_to_dirac(f, x) for f, x in zip(history.densities, orbit)]
    history.xstar = float(xstar)
    history.w1_series = series
    return series


def wasserstein_slack(history: SyncHistory, tol: float = 1e-3) -> np.ndarray:
    """q^n W1_0 + tol - W1_n per step; nonnegative when the decay bound holds."""
    w = np.asarray(history.w1_series, dtype=float)
    if w.size == 0:
        raise ValueError("run wasserstein_trajectory first")
    n = np.arange(w.size)
    return history.q**n * w[0] + tol - w
