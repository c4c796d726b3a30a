"""Mean-field coupling map Phi(x) = x + eps * G(x), G(x) = int g(y - x) f(y) dy."""
from __future__ import annotations

import numpy as np

from . import kernels
from .density import PeriodicSpline
from .torus import wrap

DIRECT_MAX_M = 2048
INVERSE_TOL = 1e-15
INVERSE_MAXIT = 100


class NotADiffeomorphism(ValueError):
    """Phi' fails to stay positive, so Phi cannot be inverted."""


def displacement(f: PeriodicSpline, x):
    """G(x) = int_{x-1/2}^{x+1/2} (t - x) f(t) dt on the lift.

    The window ends are exactly the jump points of the kernel, so the
    integrand is smooth inside; the spline integral is evaluated exactly.
    """
    out = kernels.displacement_at(np.asarray(x, dtype=float), f.coef, f.P0, f.P1,
                                  f.mass, f.first_moment)
    if np.ndim(out) == 0:
        return float(out)
    return out


def node_displacements(f: PeriodicSpline, method: str = "auto") -> np.ndarray:
    """G at every node.

    ``direct`` sums cell moments over each window (O(M^2)); ``prefix`` uses
    the lift antiderivatives (O(M)).  ``auto`` picks direct up to M = 2048.
    """
    if method == "auto":
        method = "direct" if f.M <= DIRECT_MAX_M else "prefix"
    if method == "direct":
        return kernels.node_displacement_direct(f.cell_mass, f.cell_moment)
    if method == "prefix":
        return displacement(f, f.nodes)
    raise ValueError(f"unknown method {method!r}")


class CouplingField:
    """Phi for a fixed coupling strength and source density.

    Building the field precomputes G at the nodes and verifies that
    Phi' = 1 + eps (f(x + 1/2) - 1) stays positive.
    """

    def __init__(self, eps: float, source: PeriodicSpline, method: str = "auto"):
        eps = float(eps)
        if not 0.0 <= eps < 1.0:
            raise ValueError(f"coupling strength {eps} outside [0, 1)")
        self.eps = eps
        self.source = source
        self.displacement = node_displacements(source, method)
        M = source.M
        self.node_phi_prime = 1.0 + eps * (np.roll(source.values, -(M // 2)) - source.mass)
        lower = 1.0 + eps * (float(np.min(source.values)) - source.mass)
        self.min_phi_prime = float(min(np.min(self.node_phi_prime), lower))
        if not self.min_phi_prime > 0.0:
            raise NotADiffeomorphism(
                f"Phi' reaches {self.min_phi_prime:.3g} <= 0 at eps={eps}; source density is not admissible"
            )
        self.max_abs_displacement = float(np.max(np.abs(self.displacement)))
        self.last_inverse_iterations = 0

    @property
    def M(self) -> int:
        return self.source.M

    def G(self, x):
        return displacement(self.source, x)

    def phi_lift(self, x):
        x = np.asarray(x, dtype=float)
        out = x + self.eps * np.asarray(displacement(self.source, x))
        if out.ndim == 0:
            return float(out)
        return out

    def phi(self, x):
        return wrap(self.phi_lift(x))

    def phi_prime(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 + self.eps * (self.source.evaluate(x + 0.5) - self.source.mass)

    def phi_second(self, x):
        x = np.asarray(x, dtype=float)
        return self.eps * self.source.evaluate_deriv(x + 0.5)

    def phi_inverse_lift(self, y):
        """Lift value x near y with Phi(x) = y, by bracketed Newton."""
        y = np.asarray(y, dtype=float)
        if self.eps == 0.0:
            self.last_inverse_iterations = 0
            return y.copy() if y.ndim else float(y)
        f = self.source
        x, its = kernels.invert_phi(y, f.coef, f.P0, f.P1, f.mass, f.first_moment,
                                    self.eps, INVERSE_TOL, INVERSE_MAXIT)
        self.last_inverse_iterations = int(np.max(its)) if np.size(its) else 0
        if np.ndim(x) == 0:
            return float(x)
        return x

    def phi_inverse(self, y):
        return wrap(self.phi_inverse_lift(y))
