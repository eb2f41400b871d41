"""Analytic potentials of planar electrodes in the gapless-plane approximation.

The electrodes tile the plane ``y = 0``; ``y`` is the height above the chip and
``z`` the trap axis.  Every basis function is the potential produced by one
electrode held at 1 V while the rest of the plane is grounded.

Infinite strips are handled in complex form.  With ``w = x + i y`` the strip
potential is ``Im F(w) / pi`` where ``F(w) = log(w - x_hi) - log(w - x_lo)``,
so all derivatives follow from ``F'``, ``F''`` and ``F'''``.  The rf
pseudopotential is proportional to ``|F'(w)|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import AMU, E_CHARGE, YB171_MASS_AMU
from .errors import InvalidPoint


@dataclass(frozen=True)
class StripElectrode:
    """Electrode infinitely long along z, spanning ``[x_lo, x_hi]`` in x."""

    x_lo: float
    x_hi: float

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError(f"strip needs x_lo < x_hi, got {self.x_lo}, {self.x_hi}")


@dataclass(frozen=True)
class RectPatch:
    x_lo: float
    x_hi: float
    z_lo: float
    z_hi: float

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.z_lo < self.z_hi):
            raise ValueError(f"degenerate patch {self}")

    @property
    def center(self):
        return 0.5 * (self.x_lo + self.x_hi), 0.5 * (self.z_lo + self.z_hi)


@dataclass(frozen=True)
class RfDrive:
    v_rf: float
    omega_rf: float

    def __post_init__(self):
        if self.v_rf <= 0 or self.omega_rf <= 0:
            raise ValueError("rf amplitude and drive frequency must be positive")


@dataclass(frozen=True)
class IonSpecies:
    mass: float
    charge: float = E_CHARGE

    def __post_init__(self):
        if self.mass <= 0 or self.charge <= 0:
            raise ValueError("ion mass and charge must be positive")

    @classmethod
    def yb171(cls):
        return cls(mass=YB171_MASS_AMU * AMU, charge=E_CHARGE)


@dataclass
class FieldSample:
    """Scalar field value with its gradient and Hessian at one point (x, y, z)."""

    value: float
    gradient: np.ndarray = field(default_factory=lambda: np.zeros(3))
    hessian: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __add__(self, other):
        return FieldSample(self.value + other.value,
                           self.gradient + other.gradient,
                           self.hessian + other.hessian)

    def scaled(self, k):
        return FieldSample(k * self.value, k * self.gradient, k * self.hessian)


def _check_height(y):
    if np.any(np.asarray(y) <= 0):
        raise InvalidPoint("potentials are only defined above the electrode plane (y > 0)")


# -- infinite strips ---------------------------------------------------------

def strip_complex(x_lo, x_hi, x, y, order=3):
    """Return ``[F, F', F'', F''']`` (up to ``order``) of one strip at ``x + iy``.

    ``F`` uses the principal log branch, which is continuous for ``y > 0``.
    """
    w = np.asarray(x) + 1j * np.asarray(y)
    d_hi = w - x_hi
    d_lo = w - x_lo
    out = [np.log(d_hi) - np.log(d_lo), 1.0 / d_hi - 1.0 / d_lo]
    if order >= 2:
        out.append(-1.0 / d_hi**2 + 1.0 / d_lo**2)
    if order >= 3:
        out.append(2.0 / d_hi**3 - 2.0 / d_lo**3)
    return out


def strip_basis(strip: StripElectrode, point) -> FieldSample:
    """Unit-voltage potential of an infinite strip at ``point = (x, y[, z])``."""
    x, y = float(point[0]), float(point[1])
    _check_height(y)
    F, F1, F2 = strip_complex(strip.x_lo, strip.x_hi, x, y, order=2)
    # d^k/dx^a dy^b of Im F equals Im(i^b F^(a+b))
    value = (F.imag) / np.pi
    grad = np.array([F1.imag, F1.real, 0.0]) / np.pi
    hxx = F2.imag / np.pi
    hxy = F2.real / np.pi
    hess = np.array([[hxx, hxy, 0.0], [hxy, -hxx, 0.0], [0.0, 0.0, 0.0]])
    return FieldSample(float(value), grad, hess)


def rf_complex_field(strips, x, y):
    """Sum of ``F'``, ``F''``, ``F'''`` over the rf strips, divided by pi."""
    G = G1 = G2 = 0.0
    for s in strips:
        _, f1, f2, f3 = strip_complex(s.x_lo, s.x_hi, x, y, order=3)
        G = G + f1
        G1 = G1 + f2
        G2 = G2 + f3
    return G / np.pi, G1 / np.pi, G2 / np.pi


# -- rectangular patches -----------------------------------------------------

_CORNERS = ((1, 1, +1.0), (0, 0, +1.0), (1, 0, -1.0), (0, 1, -1.0))


def _patch_terms(x_lo, x_hi, z_lo, z_hi, x, y, z, hessian=True):
    """Vectorised patch potential, gradient and (optionally) Hessian.

    Each corner contributes ``atan(u v / (y R))`` with ``u = x_i - x`` and
    ``v = z_j - z``; derivatives below are the closed forms of that term.
    Returns ``(value, grad[3], hess[6])`` with the Hessian ordered
    ``xx, xy, xz, yy, yz, zz``.
    """
    xs = (x_lo, x_hi)
    zs = (z_lo, z_hi)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    val = np.zeros(np.broadcast(x, y, z).shape)
    gx = np.zeros_like(val)
    gy = np.zeros_like(val)
    gz = np.zeros_like(val)
    h = [np.zeros_like(val) for _ in range(6)] if hessian else None
    y2 = y * y
    for ix, iz, sign in _CORNERS:
        u = xs[ix] - x
        v = zs[iz] - z
        u2 = u * u
        v2 = v * v
        R2 = u2 + v2 + y2
        R = np.sqrt(R2)
        a = u2 + y2
        b = v2 + y2
        val += sign * np.arctan(u * v / (y * R))
        # d/du, d/dv, d/dy of the corner term; x = x_i - u, z = z_j - v
        du = v * y / (a * R)
        dv = u * y / (b * R)
        dy = -u * v * (R2 + y2) / (R * a * b)
        gx -= sign * du
        gz -= sign * dv
        gy += sign * dy
        if hessian:
            R3 = R2 * R
            huu = -u * v * y * (3 * u2 + 2 * v2 + 3 * y2) / (a * a * R3)
            hvv = -u * v * y * (2 * u2 + 3 * v2 + 3 * y2) / (b * b * R3)
            huv = y / R3
            huy = v * (u2 * u2 + u2 * v2 - u2 * y2 - v2 * y2 - 2 * y2 * y2) / (a * a * R3)
            hvy = u * (v2 * v2 + u2 * v2 - v2 * y2 - u2 * y2 - 2 * y2 * y2) / (b * b * R3)
            h[0] += sign * huu
            h[1] -= sign * huy
            h[2] += sign * huv
            h[3] -= sign * (huu + hvv)  # harmonic: yy = -(xx + zz)
            h[4] -= sign * hvy
            h[5] += sign * hvv
    k = 1.0 / (2.0 * np.pi)
    grad = (gx * k, gy * k, gz * k)
    if hessian:
        h = [hh * k for hh in h]
    return val * k, grad, h


def _hess_matrix(h6):
    xx, xy, xz, yy, yz, zz = (float(v) for v in h6)
    return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])


def patch_basis(patch: RectPatch, point) -> FieldSample:
    """Unit-voltage potential of a rectangular patch at ``point = (x, y, z)``."""
    x, y, z = (float(p) for p in point)
    _check_height(y)
    val, g, h = _patch_terms(patch.x_lo, patch.x_hi, patch.z_lo, patch.z_hi, x, y, z)
    return FieldSample(float(val), np.array([float(c) for c in g]), _hess_matrix(h))


def patch_values(patch: RectPatch, x, y, z):
    """Vectorised unit-voltage potential (no derivatives)."""
    _check_height(y)
    val, _, _ = _patch_terms(patch.x_lo, patch.x_hi, patch.z_lo, patch.z_hi,
                             x, y, z, hessian=False)
    return val


# -- composed potentials -----------------------------------------------------

def pseudo_coefficient(drive: RfDrive, ion: IonSpecies):
    return ion.charge**2 * drive.v_rf**2 / (4.0 * ion.mass * drive.omega_rf**2)


def pseudopotential(rf_strips, drive: RfDrive, ion: IonSpecies, point) -> FieldSample:
    """Time-averaged rf pseudopotential energy (J) with gradient and Hessian.

    ``|grad Theta_rf|^2 = |G|^2`` with ``G`` the complex field of the rf strips,
    so the derivatives reduce to products of ``G``, ``G'`` and ``G''``.
    """
    if not rf_strips:
        raise ValueError("pseudopotential needs at least one rf strip")
    x, y = float(point[0]), float(point[1])
    _check_height(y)
    G, G1, G2 = rf_complex_field(rf_strips, x, y)
    k = pseudo_coefficient(drive, ion)
    cG = np.conj(G)
    value = k * abs(G) ** 2
    gx = 2 * k * (cG * G1).real
    gy = 2 * k * (cG * 1j * G1).real
    hxx = 2 * k * (abs(G1) ** 2 + (cG * G2).real)
    hyy = 2 * k * (abs(G1) ** 2 - (cG * G2).real)
    hxy = 2 * k * (1j * cG * G2).real
    hess = np.array([[hxx, hxy, 0.0], [hxy, hyy, 0.0], [0.0, 0.0, 0.0]])
    return FieldSample(float(value), np.array([gx, gy, 0.0]), hess)


def pseudopotential_values(rf_strips, drive, ion, x, y):
    """Vectorised pseudopotential energy (J) over arrays of ``x``, ``y``."""
    _check_height(y)
    G, _, _ = rf_complex_field(rf_strips, x, y)
    return pseudo_coefficient(drive, ion) * np.abs(G) ** 2


def static_potential(patches, point) -> FieldSample:
    """Electric potential (V) of patches held at the given voltages.

    ``patches`` is an iterable of ``(RectPatch, volts)`` pairs.
    """
    x, y, z = (float(p) for p in point)
    _check_height(y)
    total = FieldSample(0.0)
    for patch, volts in patches:
        if volts == 0.0:
            continue
        total = total + patch_basis(patch, (x, y, z)).scaled(volts)
    return total


def static_values(patches, x, y, z):
    """Vectorised static potential (V) over broadcastable coordinate arrays."""
    out = 0.0
    for patch, volts in patches:
        if volts != 0.0:
            out = out + volts * patch_values(patch, x, y, z)
    return out + np.zeros(np.broadcast(np.asarray(x), np.asarray(y), np.asarray(z)).shape)


def total_effective_potential(layout, drive, ion, voltages, point) -> FieldSample:
    """Pseudopotential plus charge times static potential, in joules."""
    pseudo = pseudopotential(layout.rf_strips, drive, ion, point)
    static = static_potential(layout.static_patches(voltages), point)
    return pseudo + static.scaled(ion.charge)


def total_effective_values(layout, drive, ion, voltages, x, y, z):
    pseudo = pseudopotential_values(layout.rf_strips, drive, ion, x, y)
    return pseudo + ion.charge * static_values(layout.static_patches(voltages), x, y, z)
