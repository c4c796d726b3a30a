"""Arithmetic on the circle T = R/Z.

Points are plain floats in [0, 1).  Arcs are stored as ``(start, length)``
so that arcs through 0 need no special casing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np


class NoProperHull(ValueError):
    """Raised when a point set cannot be enclosed by an arc shorter than the circle."""


def wrap(x):
    """Reduce ``x`` modulo 1 into [0, 1).

    Accepts scalars or arrays.  Non-finite input raises ``ValueError``.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("wrap: non-finite input")
    r = np.mod(arr, 1.0)
    # np.mod(-1e-18, 1.0) rounds to 1.0
    r = np.where(r >= 1.0, 0.0, r)
    if r.ndim == 0:
        return float(r)
    return r


def circ_dist(x, y):
    """Circular distance min(|x-y|, 1-|x-y|), in [0, 1/2]."""
    # |x - y| first so the result is exactly symmetric
    d = np.mod(np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)), 1.0)
    d = np.minimum(d, 1.0 - d)
    if d.ndim == 0:
        return float(d)
    return d


def signed_rep(u):
    """Representative of ``u mod 1`` in (-1/2, 1/2]."""
    u = np.asarray(u, dtype=float)
    r = u - np.floor(u + 0.5)  # in [-1/2, 1/2)
    r = np.where(r == -0.5, 0.5, r)
    if r.ndim == 0:
        return float(r)
    return r


def kernel_g(u):
    """The 1-periodic sawtooth coupling kernel.

    g(u) = u on (-1/2, 1/2) and g(+-1/2) = 0, extended periodically.
    """
    r = signed_rep(u)
    out = np.where(np.abs(r) == 0.5, 0.0, r)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Arc:
    """Closed arc ``[start, start + length]`` on the circle."""

    start: float
    length: float

    def __post_init__(self):
        object.__setattr__(self, "length", float(self.length))
        if not (0.0 <= self.length <= 1.0):
            raise ValueError(f"arc length {self.length} outside [0, 1]")
        object.__setattr__(self, "start", wrap(self.start))

    @property
    def end(self) -> float:
        return wrap(self.start + self.length)

    @property
    def midpoint(self) -> float:
        return wrap(self.start + 0.5 * self.length)

    def contains(self, x, tol: float = 0.0):
        return arc_contains(self, x, tol)


def arc_contains(a: Arc, x, tol: float = 0.0):
    """Whether ``x`` lies on the arc, allowing ``tol`` slack at both ends."""
    if a.length + 2 * tol >= 1.0:
        res = np.ones(np.shape(x), dtype=bool)
    else:
        off = np.mod(np.asarray(x, dtype=float) - a.start + tol, 1.0)
        res = off <= a.length + 2 * tol
    if np.ndim(res) == 0:
        return bool(res)
    return res


def arc_hull(points: Iterable[float]) -> Arc:
    """Smallest arc containing a finite nonempty set of points.

    The complement of the hull is the largest gap between circularly
    consecutive points.  When two gaps tie for largest (for instance
    equally spaced points) there is no unique smallest arc and
    :class:`NoProperHull` is raised.
    """
    p = np.sort(wrap(np.atleast_1d(np.asarray(list(points), dtype=float))))
    if p.size == 0:
        raise ValueError("arc_hull of an empty set")
    if p.size == 1:
        return Arc(float(p[0]), 0.0)
    gaps = np.diff(np.concatenate([p, [p[0] + 1.0]]))
    k = int(np.argmax(gaps))
    if np.count_nonzero(gaps >= gaps[k] - 1e-15) > 1:
        raise NoProperHull("no proper hull: the points spread over the circle with no unique largest gap")
    start = p[(k + 1) % p.size]
    return Arc(float(start), float(1.0 - gaps[k]))


def largest_gap(points) -> float:
    """Largest circular gap between consecutive points of a nonempty set."""
    p = np.sort(wrap(np.atleast_1d(np.asarray(points, dtype=float))))
    return float(np.max(np.diff(np.concatenate([p, [p[0] + 1.0]]))))


def map_arc(lift: Callable[[float], float], a: Arc) -> Arc:
    """Image of an arc under a circle map given by a strictly increasing lift."""
    x0 = a.start
    y0 = float(lift(x0))
    y1 = float(lift(x0 + a.length))
    length = y1 - y0
    if length < 0:
        raise ValueError("map_arc requires an increasing lift")
    return Arc(y0, min(length, 1.0))


def arc_within(inner: Arc, outer: Arc, tol: float = 0.0) -> bool:
    """Whether ``inner`` is contained in ``outer`` up to ``tol`` at each end."""
    if outer.length + 2 * tol >= 1.0:
        return True
    off = math.fmod(inner.start - outer.start + tol + 2.0, 1.0)
    return off + inner.length <= outer.length + 2 * tol + 1e-15
