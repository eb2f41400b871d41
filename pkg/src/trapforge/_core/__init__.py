"""Hot kernels for trajectory integration.

``_fastcore`` is the compiled extension; ``_purecore`` is a numpy fallback with
the same API.  Setting ``TRAPFORGE_PURE=1`` forces the fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _purecore

if os.environ.get("TRAPFORGE_PURE", "") not in ("", "0"):
    _backend = _purecore
    BACKEND = "pure"
else:
    try:
        from . import _fastcore as _backend
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _backend = _purecore
        BACKEND = "pure"

# integrate() status codes
OK, LOST_HEIGHT, LOST_AXIAL, COINCIDENT, STEP_FAILURE = 0, 1, 2, 3, 4

PROFILE_KINDS = {"const": 0, "tanh": 1, "erf": 2}


@dataclass
class PackedModel:
    """Flat arrays describing the time-dependent effective potential.

    ``rf`` holds rf strip extents ``(x_lo, x_hi)``; ``rf_coeff`` is the
    pseudopotential prefactor divided by pi squared.  ``patches`` holds
    ``(x_lo, x_hi, z_lo, z_hi)`` with start and end voltages ``v0``, ``v1``.
    """

    rf: np.ndarray
    rf_coeff: float
    patches: np.ndarray
    v0: np.ndarray
    v1: np.ndarray
    kind: int
    steep: float
    T: float
    charge: float
    mass: float
    n_ions: int
    coulomb: float

    def __post_init__(self):
        self.rf = np.ascontiguousarray(self.rf, dtype=float).reshape(-1, 2)
        self.patches = np.ascontiguousarray(self.patches, dtype=float).reshape(-1, 4)
        self.v0 = np.ascontiguousarray(self.v0, dtype=float)
        self.v1 = np.ascontiguousarray(self.v1, dtype=float)
        if len(self.v0) != len(self.patches) or len(self.v1) != len(self.patches):
            raise ValueError("one start and one end voltage per patch required")

    def args(self):
        return (self.rf, self.rf_coeff, self.patches, self.v0, self.v1, int(self.kind),
                float(self.steep), float(self.T), float(self.charge), float(self.mass),
                int(self.n_ions), float(self.coulomb))


def profile(kind, steep, T, t):
    return _backend.profile(int(kind), float(steep), float(T), float(t))


def accel(model: PackedModel, t, pos, backend=None):
    """Accelerations (n_ions, 3) at time ``t`` for positions (n_ions, 3)."""
    be = backend or _backend
    pos = np.ascontiguousarray(pos, dtype=float).reshape(-1, 3)
    return np.asarray(be.accel(*model.args(), float(t), pos))


def potential_energy(model: PackedModel, t, pos, backend=None):
    be = backend or _backend
    pos = np.ascontiguousarray(pos, dtype=float).reshape(-1, 3)
    return float(be.potential_energy(*model.args(), float(t), pos))


def integrate(model: PackedModel, y0, t0, t1, t_eval, rtol=1e-9, atol_x=1e-12,
              atol_v=1e-6, h0=0.0, max_steps=10_000_000, y_max=np.inf, z_max=np.inf,
              min_dist=1e-8, backend=None):
    """Dormand-Prince 8(5,3) integration of the secular equations of motion.

    ``y0`` is ``[positions (n*3), velocities (n*3)]``.  Returns
    ``(y_out, status, n_steps, n_fev, t_stop)`` with ``y_out`` sampled at
    ``t_eval`` by dense output; rows after a failure are NaN.
    """
    be = backend or _backend
    y0 = np.ascontiguousarray(y0, dtype=float)
    t_eval = np.ascontiguousarray(t_eval, dtype=float)
    out = be.integrate(*model.args(), y0, float(t0), float(t1), t_eval, float(rtol),
                       float(atol_x), float(atol_v), float(h0), int(max_steps),
                       float(y_max), float(z_max), float(min_dist))
    y_out, status, n_steps, n_fev, t_stop = out
    return np.asarray(y_out), int(status), int(n_steps), int(n_fev), float(t_stop)


def backends():
    """Available backend modules keyed by name."""
    out = {"pure": _purecore}
    try:
        from . import _fastcore
        out["compiled"] = _fastcore
    except ImportError:
        pass
    return out
