"""Quartic description of the axial potential and segment-width optimisation.

The axial electric potential along the trap axis (at the rf-node transverse
position) is fitted as ``phi(z) = phi0 + alpha (z - zc)^2 + beta (z - zc)^4``
in volts, so the potential energy of a singly charged ion is ``e phi``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import electrostatics as es
from . import geometry as geo
from .constants import EPS0
from .errors import IllConditioned, NonConfining
from .scalar_opt import maximize

N_SAMPLES = 65
UNIT_PROTOCOL = {"endcap": 1.0, "wedge": 1.0, "control": -1.0}


@dataclass(frozen=True)
class VoltageSet:
    """Volts on each static electrode role; unlisted electrodes are grounded."""

    endcap: float = 0.0
    wedge: float = 0.0
    control: float = 0.0

    def __post_init__(self):
        for k, v in self.as_dict().items():
            if not math.isfinite(v):
                raise ValueError(f"voltage on {k} is not finite")

    def as_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"endcap", "wedge", "control"}
        if unknown:
            raise ValueError(f"unknown electrode roles {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def lerp(self, other, p):
        a, b = self.as_dict(), other.as_dict()
        return VoltageSet(**{k: a[k] + (b[k] - a[k]) * p for k in a})

    def max_abs(self):
        return max(abs(v) for v in self.as_dict().values())


@dataclass
class QuarticFit:
    center: float
    alpha: float
    beta: float
    phi0: float
    residual_rms: float
    half_window: float
    well_count: int = field(init=False)
    well_positions: list = field(init=False)

    def __post_init__(self):
        if self.alpha < 0 and self.beta > 0:
            off = math.sqrt(-self.alpha / (2 * self.beta))
            self.well_count = 2
            self.well_positions = [self.center - off, self.center + off]
        else:
            self.well_count = 1
            self.well_positions = [self.center]


def chebyshev_abscissae(center, half, n=N_SAMPLES):
    k = np.arange(n)
    return center + half * np.cos(np.pi * (k + 0.5) / n)[::-1]


def sample_axial(layout, voltages, window, center=0.0, n=N_SAMPLES, node=None):
    """Static potential (V) at Chebyshev points on ``[center - window, center + window]``.

    Samples sit at the rf-node transverse position ``node = (x0, h)``.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    x0, h = layout.node_analytic() if node is None else node
    z = chebyshev_abscissae(center, window, n)
    phi = es.static_values(layout.static_patches(voltages), x0, h, z)
    return z, phi


def fit_quartic(z, phi, center=None):
    """Least-squares even quartic about ``center`` (midpoint of the samples by default)."""
    z = np.asarray(z, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if len(z) < 9:
        raise ValueError("fit_quartic needs at least 9 samples")
    if center is None:
        center = 0.5 * (z.min() + z.max())
    half = np.abs(z - center).max()
    t = (z - center) / half
    A = np.column_stack([np.ones_like(t), t**2, t**4])
    cond = np.linalg.cond(A) ** 2  # normal equations
    if not np.isfinite(cond) or cond > 1e12:
        raise IllConditioned(f"quartic normal equations have condition number {cond:.3g}")
    coef, *_ = np.linalg.lstsq(A, phi, rcond=None)
    resid = phi - A @ coef
    return QuarticFit(center=float(center), alpha=float(coef[1] / half**2),
                      beta=float(coef[2] / half**4), phi0=float(coef[0]),
                      residual_rms=float(np.sqrt(np.mean(resid**2))), half_window=float(half))


def equilibrium_separation(beta, charge=es.E_CHARGE):
    """Two-ion spacing ``(q / (2 pi eps0 beta))^(1/5)`` in a pure quartic well."""
    if beta <= 0:
        raise ValueError("equilibrium separation requires beta > 0")
    return (charge / (2 * math.pi * EPS0 * beta)) ** 0.2


def omega_quartic(beta, ion):
    """Axial frequency at ``alpha = 0``: ``sqrt(3 q beta s^2 / m)``."""
    s = equilibrium_separation(beta, ion.charge)
    return math.sqrt(3 * ion.charge * beta * s * s / ion.mass)


def axial_frequency(fit, ion):
    """Axial secular frequency (rad/s) with the three regimes of the quartic well.

    The pure-quartic value takes over whenever it exceeds the harmonic value of
    the active branch, which makes the result continuous.  For ``alpha > 0``
    the switch sits at ``alpha = 1.5 beta s^2`` and for ``alpha < 0`` at
    ``|alpha| = 0.75 beta s^2``.
    """
    alpha, beta = fit.alpha, fit.beta
    q_m = ion.charge / ion.mass
    w0 = omega_quartic(beta, ion) if beta > 0 else 0.0
    if alpha > 0:
        return max(math.sqrt(2 * q_m * alpha), w0)
    if beta <= 0:
        raise NonConfining("alpha <= 0 with beta <= 0: the axial potential does not confine")
    return max(math.sqrt(4 * q_m * abs(alpha)), w0)


def axial_branch(fit, ion):
    """Name of the regime used by :func:`axial_frequency`."""
    alpha, beta = fit.alpha, fit.beta
    w0 = omega_quartic(beta, ion) if beta > 0 else 0.0
    q_m = ion.charge / ion.mass
    if alpha > 0:
        return "harmonic" if math.sqrt(2 * q_m * alpha) >= w0 else "quartic"
    return "double_well" if math.sqrt(4 * q_m * abs(alpha)) >= w0 else "quartic"


def trace_window(layout, beta=None, charge=es.E_CHARGE):
    half = layout.W / 2
    if beta is not None and beta > 0:
        half = max(half, 2 * equilibrium_separation(beta, charge))
    return half


def fit_adaptive(layout, voltages, center=0.0, node=None, charge=es.E_CHARGE):
    """Quartic fit on the window ``max(2 s, W / 2)``, refined once after a first fit."""
    half = trace_window(layout)
    fit = fit_quartic(*sample_axial(layout, voltages, half, center, node=node), center=center)
    new = trace_window(layout, fit.beta, charge)
    if new != half:
        fit = fit_quartic(*sample_axial(layout, voltages, new, center, node=node), center=center)
    return fit


# -- geometric optimisation under the unit-voltage protocol -----------------------

def design_window(layout):
    """Fit half-window used in the width scans: the mean endcap and control width."""
    return 0.5 * (layout.E + layout.C_w)


def unit_fit(layout):
    z, phi = sample_axial(layout, UNIT_PROTOCOL, design_window(layout))
    return fit_quartic(z, phi, center=0.0)


def design_template(design, a, ratio_mode="equal", width=None):
    """Five-wire trap at the depth-optimal zeta with equal segment widths."""
    zeta, _ = geo.optimize_zeta(ratio_mode)
    fw = geo.FiveWireParams.from_zeta(zeta, a, ratio_mode)
    w = (3.66 * a if design == "outer_segmented" else a) if width is None else width
    return geo.TrapLayout(fw, design, E=w, W=w, C_w=w)


def width_bounds(design, a):
    return (0.5 * a, 10 * a) if design == "outer_segmented" else (0.2 * a, 5 * a)


def optimize_segment_width(template, n_grid=200):
    """Maximise beta over a common width ``W = C_w = E``; returns ``(W*, beta*, grid)``."""
    lo, hi = width_bounds(template.design, template.five_wire.a)

    def beta(w):
        return unit_fit(template.with_widths(E=w, W=w, C_w=w)).beta

    w, b, ws, bs = maximize(beta, lo, hi, n_grid=n_grid, xtol_rel=1e-6)
    return w, b, (ws, bs)


def optimize_wedge_ratio(template, lo=0.3, hi=3.0, n_grid=200):
    """Maximise beta over ``W / E`` at fixed ``E = C_w``; returns ``(ratio*, beta*, grid)``."""
    E = template.E

    def beta(r):
        return unit_fit(template.with_widths(E=E, W=r * E, C_w=E)).beta

    r, b, rs, bs = maximize(beta, lo, hi, n_grid=n_grid, xtol_rel=1e-6)
    return r, b, (rs, bs)


def optimal_widths(design, a_ref=60e-6, ratio_mode="equal", n_grid=200):
    """Optimal common width and wedge ratio in units of ``a`` (scale invariant)."""
    tpl = design_template(design, a_ref, ratio_mode)
    w, _, _ = optimize_segment_width(tpl, n_grid=n_grid)
    tpl = tpl.with_widths(E=w, W=w, C_w=w)
    r, _, _ = optimize_wedge_ratio(tpl, n_grid=n_grid)
    return w / a_ref, r


def compare_designs(a_values, ratio_mode="equal", widths=None, n_grid=200):
    """|alpha| and beta of both designs over a ladder of rf separations.

    Widths are the per-design optima in units of ``a`` (computed once unless
    given as ``{design: w_over_a}``); the wedge ratio is kept at 1.
    Returns a list of dict rows ordered as ``a_values``.
    """
    if widths is None:
        widths = {d: optimal_widths(d, ratio_mode=ratio_mode, n_grid=n_grid)[0] for d in geo.DESIGNS}
    rows = []
    for a in a_values:
        row = {"a_m": float(a)}
        for d in geo.DESIGNS:
            fit = unit_fit(design_template(d, a, ratio_mode, width=widths[d] * a))
            row[f"{d}_abs_alpha"] = abs(fit.alpha)
            row[f"{d}_beta"] = fit.beta
        row["beta_ratio"] = row["centre_segmented_beta"] / row["outer_segmented_beta"]
        rows.append(row)
    return rows
