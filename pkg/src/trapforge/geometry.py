"""Five-wire trap layouts, rf node and escape point, trap depth and kappa.

Layout convention (metres): the narrower rf electrode ``c`` lies on
``[-c, 0]``, the central ground on ``[0, a]`` and the wider rf electrode ``b``
on ``[a, a + b]``.  This places the rf node at ``x0 = a c / (b + c)``.
Static electrodes are segmented along z, centred on ``z = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import electrostatics as es
from .constants import BIG, E_CHARGE
from .errors import DegenerateModes, NoEscapePoint, NoTrappingPoint
from .scalar_opt import maximize

RATIO_MODES = ("equal", "half", "custom")
DESIGNS = ("outer_segmented", "centre_segmented")
ROLES = ("endcap", "control", "wedge", "ground")


@dataclass(frozen=True)
class FiveWireParams:
    a: float
    b: float
    c: float
    gap: float = 0.0
    ratio_mode: str = "custom"

    def __post_init__(self):
        if min(self.a, self.b, self.c) <= 0:
            raise ValueError("a, b and c must be positive")
        if self.gap < 0:
            raise ValueError("gap must be non-negative")
        if self.ratio_mode not in RATIO_MODES:
            raise ValueError(f"ratio_mode must be one of {RATIO_MODES}")
        if self.ratio_mode == "equal" and not math.isclose(self.c, self.b):
            raise ValueError("ratio_mode 'equal' requires c == b")
        if self.ratio_mode == "half" and not math.isclose(self.c, self.b / 2):
            raise ValueError("ratio_mode 'half' requires c == b/2")

    @classmethod
    def from_zeta(cls, zeta, a, ratio_mode="equal", gap=0.0):
        b = zeta * a
        c = b if ratio_mode == "equal" else b / 2
        return cls(a=a, b=b, c=c, gap=gap, ratio_mode=ratio_mode)

    @property
    def zeta(self):
        return self.b / self.a


@dataclass(frozen=True)
class Electrode:
    name: str
    role: str
    x_lo: float
    x_hi: float
    z_lo: float = -BIG
    z_hi: float = BIG

    @property
    def patch(self):
        return es.RectPatch(self.x_lo, self.x_hi, self.z_lo, self.z_hi)


@dataclass
class TrapLayout:
    """Full planar electrode set of one trap design.

    ``E``, ``W`` and ``C_w`` are the endcap, wedge and control widths along z.
    ``d`` is the extra ground inserted between the narrower rf electrode and the
    outer static rail; ``None`` derives it from :func:`compensation_width`.
    Extents are the effective (gapless) ones; :meth:`physical_extents` gives the
    electrodes shrunk by half a gap at every shared edge.
    """

    five_wire: FiveWireParams
    design: str = "outer_segmented"
    E: float = 220e-6
    W: float = 220e-6
    C_w: float = 220e-6
    n_segments: int = 9
    d: float | None = None
    electrodes: list = field(init=False, repr=False)

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"design must be one of {DESIGNS}")
        if min(self.E, self.W, self.C_w) <= 0:
            raise ValueError("segment widths must be positive")
        if self.n_segments < 5 or self.n_segments % 2 == 0:
            raise ValueError("n_segments must be odd and at least 5")
        if self.d is None:
            self.d = compensation_width(self.five_wire) if self.design == "outer_segmented" else 0.0
        if self.d < 0:
            raise ValueError("compensation width d must be non-negative")
        self.electrodes = self._build()

    # construction ---------------------------------------------------------
    def segment_sequence(self):
        """Roles and widths along z, outermost first: ... E C W C E ..."""
        n_extra = (self.n_segments - 5) // 2
        seq = [("ground", self.E)] * n_extra + [("endcap", self.E), ("control", self.C_w)]
        return seq + [("wedge", self.W)] + seq[::-1]

    def _build(self):
        p = self.five_wire
        a, b, c = p.a, p.b, p.c
        els = [Electrode("rf_c", "rf", -c, 0.0), Electrode("rf_b", "rf", a, a + b)]
        seq = self.segment_sequence()
        total = sum(w for _, w in seq)
        if self.design == "outer_segmented":
            els.append(Electrode("gnd_centre", "ground", 0.0, a))
            rails = {"L": (-BIG, -c - self.d), "R": (a + b, BIG)}
            if self.d > 0:
                els.append(Electrode("gnd_comp", "ground", -c - self.d, -c))
        else:
            rails = {"C": (0.0, a)}
            els.append(Electrode("gnd_left", "ground", -BIG, -c))
            els.append(Electrode("gnd_right", "ground", a + b, BIG))
        for tag, (xl, xh) in rails.items():
            z = -total / 2
            els.append(Electrode(f"{tag}_end_lo", "ground", xl, xh, -BIG, z))
            for k, (role, w) in enumerate(seq):
                els.append(Electrode(f"{tag}{k}", role, xl, xh, z, z + w))
                z += w
            els.append(Electrode(f"{tag}_end_hi", "ground", xl, xh, z, BIG))
        return els

    # accessors ------------------------------------------------------------
    @property
    def rf_strips(self):
        return [es.StripElectrode(e.x_lo, e.x_hi) for e in self.electrodes if e.role == "rf"]

    @property
    def static_electrodes(self):
        return [e for e in self.electrodes if e.role in ("endcap", "control", "wedge")]

    def static_patches(self, voltages):
        """``(RectPatch, volts)`` pairs for a :class:`~trapforge.axial.VoltageSet`."""
        vmap = voltages.as_dict() if hasattr(voltages, "as_dict") else dict(voltages)
        return [(e.patch, float(vmap.get(e.role, 0.0))) for e in self.static_electrodes]

    def role_patches(self, role):
        return [e.patch for e in self.static_electrodes if e.role == role]

    def node_analytic(self):
        return rf_node_analytic(self.five_wire)

    @property
    def axial_extent(self):
        return 0.5 * sum(w for _, w in self.segment_sequence())

    def physical_extents(self):
        """Electrode extents with half a gap removed at every internal edge."""
        g = self.five_wire.gap / 2
        out = []
        for e in self.electrodes:
            xl = e.x_lo + (g if e.x_lo > -BIG else 0.0)
            xh = e.x_hi - (g if e.x_hi < BIG else 0.0)
            zl = e.z_lo + (g if e.z_lo > -BIG else 0.0)
            zh = e.z_hi - (g if e.z_hi < BIG else 0.0)
            out.append(Electrode(e.name, e.role, xl, xh, zl, zh))
        return out

    def adjacent_pairs(self):
        """Pairs of electrode names that share an edge of positive length."""
        pairs = []
        els = self.electrodes
        tol = 1e-12
        for i in range(len(els)):
            for j in range(i + 1, len(els)):
                p, q = els[i], els[j]
                z_ov = min(p.z_hi, q.z_hi) - max(p.z_lo, q.z_lo)
                x_ov = min(p.x_hi, q.x_hi) - max(p.x_lo, q.x_lo)
                x_touch = abs(p.x_hi - q.x_lo) < tol or abs(q.x_hi - p.x_lo) < tol
                z_touch = abs(p.z_hi - q.z_lo) < tol or abs(q.z_hi - p.z_lo) < tol
                if (x_touch and z_ov > tol) or (z_touch and x_ov > tol):
                    pairs.append((p.name, q.name))
        return pairs

    # templates ------------------------------------------------------------
    def with_widths(self, E=None, W=None, C_w=None):
        return TrapLayout(self.five_wire, self.design,
                          E=self.E if E is None else E,
                          W=self.W if W is None else W,
                          C_w=self.C_w if C_w is None else C_w,
                          n_segments=self.n_segments,
                          d=None if self.design == "outer_segmented" else self.d)

    def scaled(self, s):
        p = self.five_wire
        fw = FiveWireParams(p.a * s, p.b * s, p.c * s, p.gap * s, p.ratio_mode)
        return TrapLayout(fw, self.design, self.E * s, self.W * s, self.C_w * s,
                          self.n_segments, self.d * s)


@dataclass
class NodeInfo:
    x0: float
    h: float
    depth: float
    escape_point: np.ndarray
    principal_axis_angle: float | None
    omega_x: float
    omega_y: float


# -- closed forms ------------------------------------------------------------

def rf_node_analytic(p: FiveWireParams):
    """``(x0, h)`` of the rf node of a gapless five-wire trap."""
    a, b, c = p.a, p.b, p.c
    return a * c / (b + c), math.sqrt(a * b * c * (a + b + c)) / (b + c)


def kappa_exact(a, b, c):
    """Trap-depth geometric factor for rf separation ``a`` and widths ``b``, ``c``."""
    s = 2 * a + b + c
    root = math.sqrt(a * (a + b + c))
    return (2 * math.sqrt(a * b * c * (a + b + c)) / (s * (s + 2 * root))) ** 2


def kappa_parameterised(zeta, ratio_mode="equal"):
    """kappa as a function of ``zeta = b / a`` for ``c = b`` or ``c = b / 2``."""
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    z = zeta
    if ratio_mode == "equal":
        return z**2 * (1 + 2 * z) / (4 * (1 + z) ** 2 * (1 + z + math.sqrt(1 + 2 * z)) ** 2)
    if ratio_mode == "half":
        return (4 * z**2 * (2 + 3 * z)
                / ((2 + 1.5 * z) ** 2 * (4 + 3 * z + 4 * math.sqrt(1 + 1.5 * z)) ** 2))
    raise ValueError("ratio_mode must be 'equal' or 'half'")


def optimize_zeta(ratio_mode="equal", lo=0.1, hi=50.0):
    """Maximise kappa over zeta; returns ``(zeta_star, kappa_star)``."""
    zs, ks, _, _ = maximize(lambda z: kappa_parameterised(z, ratio_mode), lo, hi,
                            n_grid=512, log_grid=True, xtol_rel=1e-6)
    return zs, ks


def compensation_width(p: FiveWireParams):
    """Width of the extra ground strip beside the narrower rf electrode."""
    return abs(p.b - p.c) + (p.a * p.c / (p.b + p.c) - p.a / 2)


def trap_depth_analytic(h, kappa, drive: es.RfDrive, ion: es.IonSpecies):
    """Trap depth in eV from ion height and kappa."""
    if h <= 0 or kappa <= 0:
        raise ValueError("h and kappa must be positive")
    joules = ion.charge**2 * drive.v_rf**2 * kappa / (math.pi**2 * ion.mass * drive.omega_rf**2 * h**2)
    return joules / E_CHARGE


# -- numeric node / escape point -------------------------------------------

def _complex_newton(fun, dfun, w0, max_iter=100, tol=1e-13, max_frac=0.3):
    """Damped Newton iteration for a root of a holomorphic function."""
    w = complex(w0)
    for _ in range(max_iter):
        f = fun(w)
        df = dfun(w)
        if df == 0 or not np.isfinite(df):
            return None
        step = f / df
        lim = max_frac * w.imag
        if abs(step) > lim:
            step *= lim / abs(step)
        w = w - step
        if w.imag <= 0 or not np.isfinite(w):
            return None
        if abs(step) < tol * abs(w):
            return w
    return None


def _rf_G(strips):
    def G(w):
        return complex(es.rf_complex_field(strips, w.real, w.imag)[0])

    def G1(w):
        return complex(es.rf_complex_field(strips, w.real, w.imag)[1])

    def G2(w):
        return complex(es.rf_complex_field(strips, w.real, w.imag)[2])

    return G, G1, G2


def _default_seed(layout):
    p = layout.five_wire
    x0, h = rf_node_analytic(p)
    return complex(x0, h)


def rf_node_numeric(layout: TrapLayout, drive: es.RfDrive, ion: es.IonSpecies,
                    seed=None, with_modes=True) -> NodeInfo:
    """Locate the rf node, the escape point above it and the trap depth.

    The pseudopotential is proportional to ``|G|^2`` with ``G`` holomorphic, so
    the node is a root of ``G`` and the escape point a root of ``G'``.
    """
    strips = layout.rf_strips
    if not strips:
        raise NoTrappingPoint("layout has no rf electrodes")
    G, G1, G2 = _rf_G(strips)
    w0 = _default_seed(layout) if seed is None else complex(*seed)
    node = _complex_newton(G, G1, w0)
    if node is None:
        raise NoTrappingPoint("damped Newton search for the rf node diverged")
    esc = _escape_point(layout, drive, ion, node)
    psi_node = es.pseudopotential(strips, drive, ion, (node.real, node.imag)).value
    psi_esc = es.pseudopotential(strips, drive, ion, (esc.real, esc.imag)).value
    depth = (psi_esc - psi_node) / E_CHARGE
    wx = wy = float("nan")
    angle = None
    if with_modes:
        wx, wy, angle = radial_modes(layout, drive, ion, node=(node.real, node.imag),
                                     strict=False)
    return NodeInfo(node.real, node.imag, depth, np.array([esc.real, esc.imag, 0.0]),
                    angle, wx, wy)


def _escape_point(layout, drive, ion, node):
    """Second stationary point of the pseudopotential above the node.

    A 1-D damped Newton on ``dPsi/dy`` along the vertical through the node,
    seeded at twice the node height, gives the starting point for a 2-D
    Newton on ``G' = 0``.
    """
    strips = layout.rf_strips
    x = node.real
    h = node.imag

    def dpsi(y):
        s = es.pseudopotential(strips, drive, ion, (x, y))
        return s.gradient[1], s.hessian[1, 1]

    y = 2 * h
    found = False
    for _ in range(200):
        g, hy = dpsi(y)
        if hy >= 0:
            # not yet in the concave region around the maximum; walk upward
            y *= 1.1
            continue
        step = -g / hy
        step = max(min(step, 0.5 * (y - h)), -0.5 * (y - h))
        y += step
        if abs(step) < 1e-12 * y:
            found = True
            break
        if y > 1e3 * h:
            break
    if not found:
        raise NoEscapePoint("no stationary point of the pseudopotential above the node")
    _, G1, G2 = _rf_G(strips)

    def G2w(w):
        return G2(w)

    esc = _complex_newton(G1, G2w, complex(x, y), max_frac=0.2)
    if esc is None or esc.imag <= h:
        raise NoEscapePoint("escape-point refinement failed")
    return esc


def trap_depth_numeric(layout, drive, ion):
    """Trap depth (eV) from the stationary points of the pseudopotential."""
    return rf_node_numeric(layout, drive, ion, with_modes=False).depth


def radial_modes(layout, drive, ion, voltages=None, node=None, strict=True):
    """Radial secular frequencies and principal-axis angle at the rf node.

    Uses the Hessian of the total effective potential restricted to the x-y
    plane.  Returns ``(omega_x, omega_y, angle)``; ``omega_x`` belongs to the
    mode closer to the x axis.  ``angle`` is the signed rotation from the
    x axis of the soft (lower-frequency) axis, in ``(-pi/2, pi/2]``.  With no
    static voltages the gapless pseudopotential is isotropic at the node; that raises
    :class:`DegenerateModes` when ``strict``, otherwise the angle is ``None``.
    """
    if node is None:
        info = rf_node_numeric(layout, drive, ion, with_modes=False)
        node = (info.x0, info.h)
    pt = (node[0], node[1], 0.0)
    hess = es.pseudopotential(layout.rf_strips, drive, ion, pt).hessian
    if voltages is not None:
        stat = es.static_potential(layout.static_patches(voltages), pt)
        hess = hess + ion.charge * stat.hessian
    h2 = hess[:2, :2]
    lam, vec = np.linalg.eigh(h2)
    if lam[0] <= 0:
        raise NoTrappingPoint("radial curvature is not confining at the node")
    omegas = np.sqrt(lam / ion.mass)
    if abs(lam[1] - lam[0]) <= 1e-9 * abs(lam).mean():
        if strict:
            raise DegenerateModes("radial modes are degenerate; principal axes undefined")
        return float(omegas[0]), float(omegas[1]), None
    soft = vec[:, 0]
    angle = math.atan2(soft[1], soft[0]) % math.pi
    if angle > math.pi / 2:
        angle -= math.pi
    # assign the mode whose axis is nearer to x as omega_x
    if abs(vec[0, 0]) >= abs(vec[0, 1]):
        wx, wy = omegas[0], omegas[1]
    else:
        wx, wy = omegas[1], omegas[0]
    return float(wx), float(wy), float(angle)


# -- depth with static fields -------------------------------------------------

def local_minimum(layout, drive, ion, voltages, guess, max_iter=60):
    """Newton search for a local minimum of the single-ion effective potential."""
    r = np.array(guess, dtype=float)
    for _ in range(max_iter):
        s = es.total_effective_potential(layout, drive, ion, voltages, r)
        try:
            step = np.linalg.solve(s.hessian, s.gradient)
        except np.linalg.LinAlgError:
            raise NoTrappingPoint("singular Hessian while locating the well") from None
        lim = 0.2 * r[1]
        n = np.linalg.norm(step)
        if n > lim:
            step *= lim / n
        r = r - step
        if r[1] <= 0:
            raise NoTrappingPoint("well search left the region above the chip")
        if n < 1e-13:
            break
    s = es.total_effective_potential(layout, drive, ion, voltages, r)
    if np.any(np.linalg.eigvalsh(s.hessian) <= 0):
        raise NoTrappingPoint("stationary point is not a minimum")
    return r, s.value


def depth_with_statics(layout, drive, ion, voltages, guess, n_grid=800):
    """Escape energy (eV) from the well nearest ``guess``.

    The smaller of the barrier along the vertical column through the well and
    the barrier along the trap axis on the outward side of the well.
    """
    r, u0 = local_minimum(layout, drive, ion, voltages, guess)
    x, y, z = r
    h = layout.node_analytic()[1]
    ys = np.linspace(y, y + 8 * h, n_grid)
    uy = es.total_effective_values(layout, drive, ion, voltages, x, ys, z)
    vertical = uy.max() - u0
    zlim = layout.axial_extent + 4 * h
    barriers = []
    sides = (1.0, -1.0) if abs(z) < 1e-9 else (math.copysign(1.0, z),)
    for sgn in sides:
        zs = z + sgn * np.linspace(0.0, zlim, n_grid)
        uz = es.total_effective_values(layout, drive, ion, voltages, x, y, zs)
        barriers.append(uz.max() - u0)
    axial = min(barriers)
    return min(vertical, axial) / E_CHARGE, r
