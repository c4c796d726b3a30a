"""Kernel backend selection.

The compiled extension ``_kernels`` is used when it imports; otherwise the
numpy fallback ``_kernels_py`` takes over.  Setting the environment variable
``COUPLEDCIRCLE_PURE_PYTHON=1`` forces the fallback.
"""
import os

if os.environ.get("COUPLEDCIRCLE_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
set_num_threads = _impl.set_num_threads
cumulative = _impl.cumulative
displacement_at = _impl.displacement_at
spline_eval = _impl.spline_eval
pair_displacements = _impl.pair_displacements
node_displacement_direct = _impl.node_displacement_direct
invert_phi = _impl.invert_phi
invert_perturbed_linear = _impl.invert_perturbed_linear

__all__ = [
    "BACKEND",
    "set_num_threads",
    "cumulative",
    "displacement_at",
    "spline_eval",
    "pair_displacements",
    "node_displacement_direct",
    "invert_phi",
    "invert_perturbed_linear",
]
