"""Finite mean-field system of N coupled particles on the circle.

Each particle moves by x_i -> T(x_i + eps * (1/N) sum_j g(x_j - x_i)),
with all coupling sums taken from the pre-step configuration.  The
empirical measure of the ensemble follows the same recursion as the
continuum density, which makes the ensemble an independent check on the
grid operator.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .coupling import CouplingField
from .density import GridDensity, sample, wasserstein_empirical
from .maps import ExpandingMap
from .torus import largest_gap, wrap
from .transfer import step

DIRECT_MAX_N = 4096


@dataclass(frozen=True)
class ParticleEnsemble:
    positions: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(wrap(np.asarray(self.positions, dtype=float))).astype(float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("an ensemble needs at least one particle")
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)

    @property
    def n_particles(self) -> int:
        return self.positions.size

    @classmethod
    def from_density(cls, d: GridDensity, n: int, seed: int) -> "ParticleEnsemble":
        return cls(sample(d, n, seed))


def _displacements_sorted(x: np.ndarray) -> np.ndarray:
    """O(N log N) coupling sums from prefix sums over the sorted, tripled lift.

    For a particle at x, the partners contributing g(u) = u lie in the open
    window (x - 1/2, x + 1/2); partners exactly 1/2 away contribute zero.
    """
    n = x.size
    s = np.sort(x)
    ext = np.concatenate([s - 1.0, s, s + 1.0])
    P = np.concatenate([[0.0], np.cumsum(ext)])
    lo = np.searchsorted(ext, x - 0.5, side="right")
    hi = np.searchsorted(ext, x + 0.5, side="left")
    return ((P[hi] - P[lo]) - (hi - lo) * x) / n


def coupling_displacements(x, method: str = "auto") -> np.ndarray:
    """(1/N) sum_j g(x_j - x_i) for every particle i.

    ``direct`` is the O(N^2) double sum, ``sorted`` the prefix-sum path;
    ``auto`` uses direct up to N = 4096.
    """
    x = np.ascontiguousarray(x, dtype=float)
    if method == "auto":
        method = "direct" if x.size <= DIRECT_MAX_N else "sorted"
    if method == "direct":
        return kernels.pair_displacements(x)
    if method == "sorted":
        return _displacements_sorted(x)
    raise ValueError(f"unknown method {method!r}")


def particle_step(ens: ParticleEnsemble, T: ExpandingMap, eps: float,
                  method: str = "auto") -> ParticleEnsemble:
    """Synchronous update of every particle."""
    eps = float(eps)
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"coupling strength {eps} outside [0, 1)")
    x = ens.positions
    moved = wrap(x + eps * coupling_displacements(x, method))
    return ParticleEnsemble(T(moved))


def ensemble_diameter(ens: ParticleEnsemble) -> float:
    """Length of the smallest arc holding every particle (1 minus the largest gap)."""
    return 1.0 - largest_gap(ens.positions)


def continuum_trajectory(f0: GridDensity, T: ExpandingMap, eps: float, n_steps: int) -> list[GridDensity]:
    out = [f0.normalize()]
    for _ in range(n_steps):
        out.append(step(eps, out[-1], T))
    return out


@dataclass
class ComparisonResult:
    seed: int
    n_particles: int
    w1: list[float]
    diameters: list[float]
    final: ParticleEnsemble = field(repr=False, default=None)

    def rows(self):
        """(n, w1_empirical_vs_continuum, ensemble_diameter) per step."""
        for n, (w, d) in enumerate(zip(self.w1, self.diameters)):
            yield n, w, d


def empirical_vs_continuum(f0: GridDensity, T: ExpandingMap, eps: float, n_steps: int,
                           N: int, seed: int, continuum: list[GridDensity] | None = None
                           ) -> ComparisonResult:
    """Evolve N particles sampled from f0 next to the grid density.

    Returns W1 between the empirical measure and the density at steps
    0..n_steps.  The continuum side does not depend on the seed, so a
    precomputed ``continuum`` trajectory may be passed in.
    """
    if continuum is None:
        continuum = continuum_trajectory(f0, T, eps, n_steps)
    if len(continuum) < n_steps + 1:
        raise ValueError("continuum trajectory is shorter than n_steps + 1")
    ens = ParticleEnsemble.from_density(continuum[0], N, seed)
    w1 = [wasserstein_empirical(ens.positions, continuum[0])]
    diam = [ensemble_diameter(ens)]
    for k in range(1, n_steps + 1):
        ens = particle_step(ens, T, eps)
        w1.append(wasserstein_empirical(ens.positions, continuum[k]))
        diam.append(ensemble_diameter(ens))
    return ComparisonResult(int(seed), int(N), w1, diam, ens)


def pushforward_histogram(f: GridDensity, T: ExpandingMap, eps: float, n: int, bins: int,
                          seed: int) -> np.ndarray:
    """Monte-Carlo image of f under T o Phi_f, as bin masses on ``bins`` equal cells.

    Samples are pushed through the continuum coupling map built from f
    (not from the samples), so this isolates the operator discretization.
    """
    x = sample(f, n, seed)
    fld = CouplingField(eps, f)
    y = T(fld.phi(x))
    counts = np.bincount(np.minimum((y * bins).astype(np.int64), bins - 1), minlength=bins)
    return counts / n


def bin_masses(d: GridDensity, bins: int) -> np.ndarray:
    """Exact spline mass of d on each of ``bins`` equal cells, normalized."""
    edges = np.arange(bins + 1) / bins
    c, _ = d.cumulative(edges)
    return np.diff(c) / d.mass
