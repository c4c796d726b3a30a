"""Compiled kernels against the numpy fallback.

Run from the repository root after building the extension::

    python benchmarks/bench_kernels.py [--M 4096] [--repeat 5]

Each row reports the best-of-``repeat`` wall time for both backends, the
speedup, and the largest absolute difference between their outputs.
"""
from __future__ import annotations

import argparse
import contextlib
import sys
import timeit

import numpy as np

from coupledcircle import _kernels_py, kernels
from coupledcircle.density import GridDensity
from coupledcircle.maps import make_perturbed_linear
from coupledcircle.transfer import step

try:
    from coupledcircle import _kernels
except ImportError:
    _kernels = None

NAMES = [n for n in kernels.__all__ if n not in ("BACKEND", "set_num_threads")]


@contextlib.contextmanager
def backend(mod):
    """Route ``coupledcircle.kernels`` through ``mod`` for the duration."""
    saved = {n: getattr(kernels, n) for n in NAMES}
    for n in NAMES:
        setattr(kernels, n, getattr(mod, n))
    try:
        yield
    finally:
        for n, f in saved.items():
            setattr(kernels, n, f)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def cases(M: int, n_particles: int):
    f = GridDensity.trig(M, a=0.3, b=0.1, k=2)
    args = (f.coef, f.P0, f.P1, f.mass, f.first_moment)
    x = np.random.default_rng(0).random(4 * M)
    y = np.random.default_rng(1).random(M)
    p = np.random.default_rng(2).random(n_particles)
    T = make_perturbed_linear(2, 0.05)
    yield "displacement_at", lambda k: k.displacement_at(x, *args)
    yield "node_displacement_direct", lambda k: k.node_displacement_direct(f.cell_mass, f.cell_moment)
    yield "pair_displacements", lambda k: k.pair_displacements(p)
    yield "invert_phi", lambda k: k.invert_phi(y, *args, 0.3, 1e-14, 60)[0]
    yield "invert_perturbed_linear", lambda k: k.invert_perturbed_linear(y, 2, 0.05, 1e-14, 200)

    def full_step(k):
        with backend(k):
            return step(0.02, f, T).values

    yield "step (perturbed map)", full_step


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=4096, help="grid resolution")
    ap.add_argument("--particles", type=int, default=4096, help="ensemble size for pair_displacements")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1, help="OpenMP threads for the compiled backend")
    a = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    _kernels.set_num_threads(a.threads)
    print(f"M={a.M} particles={a.particles} threads={a.threads} repeat={a.repeat}")
    print(f"{'kernel':28s} {'cython [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases(a.M, a.particles):
        rc = np.asarray(fn(_kernels))
        rp = np.asarray(fn(_kernels_py))
        diff = float(np.max(np.abs(rc - rp)))
        tc = best(lambda: fn(_kernels), a.repeat)
        tp = best(lambda: fn(_kernels_py), a.repeat)
        print(f"{name:28s} {tc * 1e3:12.3f} {tp * 1e3:12.3f} {tp / tc:8.1f} {diff:11.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
