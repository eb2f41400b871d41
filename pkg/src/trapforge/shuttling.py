"""Voltage ramps, secular-motion integration and motional-quanta accounting.

Ions move in the time-averaged effective potential of the layout (rf
pseudopotential plus static electrodes) with pairwise Coulomb repulsion.
Static electrode voltages follow ``V(t) = V_start (1 - p(t)) + V_end p(t)``
where ``p`` is a normalised S-shaped ramp.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _core
from . import axial as ax
from . import electrostatics as es
from . import geometry as geo
from .constants import EPS0, HBAR, UM
from .errors import (IonLost, NoCrossing, NoTrappingPoint, StepFailure,
                     WindowTooShort)

PROFILE_KINDS = ("tanh", "erf")
HEATING_COEFFICIENT = 1.97e26  # um^4 Hz^3
HEATING_UNCERTAINTY = 0.15e26
TRACE_POINTS = 4001
TRAJECTORY_COLUMNS = ("t_s", "z1_m", "y1_m", "x1_m", "z2_m", "y2_m", "x2_m", "ke1_J", "ke2_J",
                      "omega_z_rad_s", "v_wedge_V", "v_control_V")


# -- ramps -----------------------------------------------------------------

@dataclass(frozen=True)
class RampProfile:
    kind: str = "tanh"
    steepness: float = 4.0
    T: float = 100e-6

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"profile kind must be one of {PROFILE_KINDS}")
        if not (self.steepness > 0 and self.T > 0):
            raise ValueError("steepness and duration must be positive")


def _check_time(t, T):
    if not 0.0 <= t <= T:
        raise ValueError(f"time {t} outside the ramp [0, {T}]")


def profile_value(p: RampProfile, t):
    """Fraction of the ramp completed at ``t``; 0 at the start, 1 at the end."""
    _check_time(t, p.T)
    f = math.tanh if p.kind == "tanh" else math.erf
    return 0.5 * (f(p.steepness * (2.0 * t / p.T - 1.0)) / f(p.steepness) + 1.0)


def profile_rate(p: RampProfile, t):
    """Time derivative of :func:`profile_value` (1/s)."""
    _check_time(t, p.T)
    x = p.steepness * (2.0 * t / p.T - 1.0)
    if p.kind == "tanh":
        d = 1.0 - math.tanh(x) ** 2
        norm = math.tanh(p.steepness)
    else:
        d = 2.0 / math.sqrt(math.pi) * math.exp(-x * x)
        norm = math.erf(p.steepness)
    return d * p.steepness / (p.T * norm)


def matched_erf_steepness(tanh_steepness):
    """erf steepness whose ramp has the same midpoint slope as the tanh ramp."""
    target = tanh_steepness / math.tanh(tanh_steepness)
    return brentq(lambda n: 2 * n / (math.sqrt(math.pi) * math.erf(n)) - target, 1e-6, 1e3)


@dataclass(frozen=True)
class Waveform:
    start: ax.VoltageSet
    end: ax.VoltageSet
    profile: RampProfile

    @property
    def T(self):
        return self.profile.T

    def reversed(self):
        """Recombination: the same ramp run from the end set back to the start set."""
        return Waveform(self.end, self.start, self.profile)


def waveform_at(w: Waveform, t):
    p = profile_value(w.profile, t)
    a, b = w.start.as_dict(), w.end.as_dict()
    return ax.VoltageSet(**{k: a[k] * (1.0 - p) + b[k] * p for k in a})


# -- equilibrium -----------------------------------------------------------

@dataclass
class IonState:
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        self.velocities = np.asarray(self.velocities, dtype=float).reshape(-1, 3)
        if self.positions.shape != self.velocities.shape:
            raise ValueError("positions and velocities must have the same shape")
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.velocities))):
            raise ValueError("ion state must be finite")

    @property
    def n_ions(self):
        return len(self.positions)

    def flat(self):
        return np.concatenate([self.positions.ravel(), self.velocities.ravel()])


def coulomb_constant(ion):
    return ion.charge**2 / (4 * math.pi * EPS0)


def _energy_derivatives(layout, drive, ion, voltages, pos):
    """Energy, gradient and Hessian of the n-ion system at stacked positions."""
    n = len(pos)
    energy = 0.0
    grad = np.zeros(3 * n)
    hess = np.zeros((3 * n, 3 * n))
    for i in range(n):
        s = es.total_effective_potential(layout, drive, ion, voltages, pos[i])
        energy += s.value
        grad[3 * i:3 * i + 3] = s.gradient
        hess[3 * i:3 * i + 3, 3 * i:3 * i + 3] = s.hessian
    kc = coulomb_constant(ion)
    for i in range(n):
        for j in range(i + 1, n):
            d = pos[i] - pos[j]
            r = math.sqrt(d @ d)
            energy += kc / r
            g = -kc * d / r**3
            blk = kc * (3 * np.outer(d, d) / r**5 - np.eye(3) / r**3)
            grad[3 * i:3 * i + 3] += g
            grad[3 * j:3 * j + 3] -= g
            hess[3 * i:3 * i + 3, 3 * i:3 * i + 3] += blk
            hess[3 * j:3 * j + 3, 3 * j:3 * j + 3] += blk
            hess[3 * i:3 * i + 3, 3 * j:3 * j + 3] -= blk
            hess[3 * j:3 * j + 3, 3 * i:3 * i + 3] -= blk
    return energy, grad, hess


def _ion_energy(layout, drive, ion, voltages, pos):
    if np.any(pos[:, 1] <= 0):
        return math.inf
    return _energy_derivatives(layout, drive, ion, voltages, pos)[0]


def equilibrium(layout, drive, ion, voltages, guess, max_iter=200, tol=1e-13):
    """Minimise the n-ion energy from ``guess``; returns positions (n, 3).

    Newton steps on an eigenvalue-shifted Hessian with backtracking, so the
    iteration descends to a minimum instead of stopping on a saddle.
    """
    pos = np.array(guess, dtype=float).reshape(-1, 3)
    scale = layout.node_analytic()[1]
    u, g, H = _energy_derivatives(layout, drive, ion, voltages, pos)
    for _ in range(max_iter):
        lam, vec = np.linalg.eigh(H)
        convex = lam[0] > 0
        floor = 1e-6 * np.abs(lam).max()
        lam = np.where(lam < floor, np.maximum(np.abs(lam), floor), lam)
        step = (vec @ ((vec.T @ g) / lam)).reshape(-1, 3)
        n = np.linalg.norm(step)
        if n > 0.1 * scale:
            step *= 0.1 * scale / n
            n = 0.1 * scale
        if n < tol * scale:
            break
        if convex and n < 1e-6 * scale:
            # inside the quadratic basin energy differences drop below rounding
            pos = pos - step
        else:
            f = 1.0
            while f > 1e-8:
                trial = pos - f * step
                u_new = _ion_energy(layout, drive, ion, voltages, trial)
                if u_new <= u:
                    break
                f *= 0.5
            else:
                break
            pos = trial
        u, g, H = _energy_derivatives(layout, drive, ion, voltages, pos)
    if np.linalg.eigvalsh(H)[0] <= 0:
        raise NoTrappingPoint("equilibrium is not a minimum of the ion energy")
    return pos


def equilibrium_velocity_factor(layout, drive, ion, w: Waveform, t, pos):
    """``d r_eq / d p`` at ramp fraction ``p(t)`` by implicit differentiation."""
    v = waveform_at(w, t)
    _, _, H = _energy_derivatives(layout, drive, ion, v, pos)
    a, b = w.start.as_dict(), w.end.as_dict()
    dv = ax.VoltageSet(**{k: b[k] - a[k] for k in a})
    patches = layout.static_patches(dv)
    dg = np.concatenate([ion.charge * es.static_potential(patches, r).gradient for r in pos])
    return -np.linalg.solve(H, dg).reshape(-1, 3)


def initial_guess(layout, n_ions, beta=None, charge=es.E_CHARGE):
    x0, h = layout.node_analytic()
    if n_ions == 1:
        return np.array([[x0, h, 0.0]])
    s = ax.equilibrium_separation(beta, charge) if beta and beta > 0 else 0.2 * layout.W
    zs = (np.arange(n_ions) - (n_ions - 1) / 2) * s
    return np.array([[x0, h, z] for z in zs])


def equilibrium_at(layout, drive, ion, voltages, n_ions, guess=None):
    if guess is None:
        fit = ax.fit_adaptive(layout, voltages, charge=ion.charge)
        guess = initial_guess(layout, n_ions, fit.beta, ion.charge)
    return equilibrium(layout, drive, ion, voltages, guess)


# -- packed model and integration ------------------------------------------------

def pack_model(layout, drive, ion, w: Waveform, n_ions, static_only=False):
    els = layout.static_electrodes
    a, b = w.start.as_dict(), w.end.as_dict()
    rf = np.array([[s.x_lo, s.x_hi] for s in layout.rf_strips])
    patches = np.array([[e.x_lo, e.x_hi, e.z_lo, e.z_hi] for e in els])
    v0 = np.array([a[e.role] for e in els])
    v1 = np.array([b[e.role] for e in els])
    kind = 0 if static_only else _core.PROFILE_KINDS[w.profile.kind]
    return _core.PackedModel(rf=rf, rf_coeff=es.pseudo_coefficient(drive, ion) / math.pi**2,
                             patches=patches, v0=v0, v1=v1, kind=kind,
                             steep=w.profile.steepness, T=w.T, charge=ion.charge,
                             mass=ion.mass, n_ions=n_ions, coulomb=coulomb_constant(ion))


@dataclass
class Tolerances:
    rtol: float = 1e-9
    atol: float = 1e-12  # SI units, applied to positions (m) and velocities (m/s)
    samples_per_period: int = 40
    max_steps: int = 20_000_000


@dataclass
class Trajectory:
    t: np.ndarray
    positions: np.ndarray  # (n_t, n_ions, 3)
    velocities: np.ndarray
    n_steps: int
    n_fev: int


def integrate(layout, drive, ion, w: Waveform, initial: IonState, tol: Tolerances = None,
              t_eval=None, omega_ref=None, static=False, t_end=None, escape_height=None):
    """Integrate the secular equations of motion over the ramp.

    ``static=True`` holds the start voltages for the whole run (``t_end``
    may then exceed the ramp duration).  Raises :class:`IonLost` when an ion
    rises above the escape height, leaves the segmented region or two ions
    come within 10 nm, and :class:`StepFailure` if the step size collapses.
    ``omega_ref`` (rad/s) sets the output spacing when ``t_eval`` is not
    given: ``samples_per_period`` samples per period of that frequency.
    """
    tol = tol or Tolerances()
    t_end = w.T if t_end is None else t_end
    if omega_ref is None:
        fit = ax.fit_adaptive(layout, w.start, charge=ion.charge)
        omega_ref = ax.axial_frequency(fit, ion)
    if t_eval is None:
        n = max(int(math.ceil(t_end * omega_ref / (2 * math.pi) * tol.samples_per_period)), 2) + 1
        t_eval = np.linspace(0.0, t_end, n)
    if escape_height is None:
        info = geo.rf_node_numeric(layout, drive, ion, with_modes=False)
        escape_height = info.escape_point[1]
    model = pack_model(layout, drive, ion, w, initial.n_ions, static_only=static)
    y_out, status, n_steps, n_fev, t_stop = _core.integrate(
        model, initial.flat(), 0.0, t_end, t_eval, rtol=tol.rtol, atol_x=tol.atol,
        atol_v=tol.atol, max_steps=tol.max_steps, y_max=escape_height,
        z_max=layout.axial_extent, min_dist=1e-8)
    if status in (_core.LOST_HEIGHT, _core.LOST_AXIAL, _core.COINCIDENT):
        reason = {1: "rose above the escape height", 2: "left the segmented region",
                  3: "came within 10 nm of each other"}[status]
        volts = w.start if static else waveform_at(w, min(max(t_stop, 0.0), w.T))
        raise IonLost(f"ion {reason} at t = {t_stop:.6e} s", t=t_stop,
                      voltages=volts.as_dict())
    if status == _core.STEP_FAILURE:
        raise StepFailure(f"integrator step size collapsed at t = {t_stop:.6e} s")
    n3 = 3 * initial.n_ions
    pos = y_out[:, :n3].reshape(len(t_eval), initial.n_ions, 3)
    vel = y_out[:, n3:].reshape(len(t_eval), initial.n_ions, 3)
    return Trajectory(np.asarray(t_eval), pos, vel, n_steps, n_fev)


def total_energy(layout, drive, ion, w, traj: Trajectory, static=True):
    """Kinetic plus potential energy (J) along a trajectory."""
    n_ions = traj.positions.shape[1]
    model = pack_model(layout, drive, ion, w, n_ions, static_only=static)
    ke = 0.5 * ion.mass * (traj.velocities**2).sum(axis=(1, 2))
    pe = np.array([_core.potential_energy(model, t, p) for t, p in zip(traj.t, traj.positions)])
    return ke + pe


# -- axial frequency trace ----------------------------------------------------

def _role_fits(layout, half, node):
    fits = {}
    for role in ("endcap", "wedge", "control"):
        v = ax.VoltageSet(**{role: 1.0})
        fits[role] = ax.fit_quartic(*ax.sample_axial(layout, v, half, node=node), center=0.0)
    return fits


def omega_z_trace(layout, w: Waveform, ion, times):
    """Axial frequency (rad/s) of the instantaneous potential at each time.

    The quartic fit is linear in the electrode voltages, so per-role fits on
    the default window are combined; instants whose window must widen to
    ``2 s`` are refitted directly.  Returns ``(omega, alpha, beta)`` arrays.
    """
    times = np.asarray(times, dtype=float)
    node = layout.node_analytic()
    half = ax.trace_window(layout)
    fits = _role_fits(layout, half, node)
    p = np.array([profile_value(w.profile, t) for t in times])
    a, b = w.start.as_dict(), w.end.as_dict()
    alpha = np.zeros_like(p)
    beta = np.zeros_like(p)
    for role, f in fits.items():
        v = a[role] * (1 - p) + b[role] * p
        alpha += v * f.alpha
        beta += v * f.beta
    omega = np.empty_like(p)
    for i in range(len(p)):
        fit = ax.QuarticFit(0.0, alpha[i], beta[i], 0.0, 0.0, half)
        if beta[i] > 0 and ax.trace_window(layout, beta[i], ion.charge) > half:
            fit = ax.fit_adaptive(layout, waveform_at(w, times[i]), node=node, charge=ion.charge)
            alpha[i], beta[i] = fit.alpha, fit.beta
        omega[i] = ax.axial_frequency(fit, ion)
    return omega, alpha, beta


# -- heating and quanta ---------------------------------------------------------

def anomalous_rate(omega, h_um, coefficient=HEATING_COEFFICIENT, angular=True):
    """Heating rate (quanta/s) scaling as ``omega^-2 h^-4``; ``h`` in micrometres."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0) or h_um <= 0:
        raise ValueError("omega and h must be positive")
    w = omega if angular else omega / (2 * math.pi)
    return coefficient / (w**2 * h_um**4)


def quanta_from_heating(t, omega, h_um, coefficient=HEATING_COEFFICIENT, angular=True):
    """Trapezoidal integral of the heating rate along an axial-frequency trace."""
    rate = anomalous_rate(omega, h_um, coefficient, angular)
    return float(np.trapezoid(rate, t)) if hasattr(np, "trapezoid") else float(np.trapz(rate, t))


def total_quanta(n_s, n_an):
    return n_s + n_an


def _window_ke_max(layout, drive, ion, w, traj, idx, static):
    """Largest kinetic energy per ion in the frame of the moving well."""
    t = traj.t[idx]
    vel = traj.velocities[idx]
    if static:
        rel = vel
    else:
        # well velocity from a few equilibria across the window, interpolated
        n_k = min(9, len(t))
        tk = np.linspace(t[0], t[-1], n_k)
        guess = None
        vk = []
        for tt in tk:
            volts = waveform_at(w, tt)
            eq = equilibrium(layout, drive, ion, volts,
                             _nearest_guess(traj, tt) if guess is None else guess)
            guess = eq
            vk.append(equilibrium_velocity_factor(layout, drive, ion, w, tt, eq)
                      * profile_rate(w.profile, tt))
        vk = np.array(vk)  # (n_k, n_ions, 3)
        well = np.empty_like(vel)
        for i in range(vel.shape[1]):
            for c in range(3):
                well[:, i, c] = np.interp(t, tk, vk[:, i, c])
        rel = vel - well
    ke = 0.5 * ion.mass * (rel**2).sum(axis=2)
    return ke.max(axis=0)


def _nearest_guess(traj, t):
    i = int(np.argmin(np.abs(traj.t - t)))
    return traj.positions[i]


def quanta_from_shuttle(layout, drive, ion, w: Waveform, traj: Trajectory, omega_start,
                        omega_end, static=False, n_periods=3):
    """Mean over ions of ``(KE_max final - KE_max initial) / (hbar omega_end)``.

    The windows cover the first and last ``n_periods`` secular periods.
    Returns ``(n_s, ke_max_initial, ke_max_final)``.
    """
    t0_win = n_periods * 2 * math.pi / omega_start
    t1_win = n_periods * 2 * math.pi / omega_end
    T = traj.t[-1]
    if T < t0_win + t1_win:
        raise WindowTooShort(f"run of {T:.3e} s is shorter than the two {n_periods}-period windows")
    i0 = np.nonzero(traj.t <= t0_win)[0]
    i1 = np.nonzero(traj.t >= T - t1_win)[0]
    ke0 = _window_ke_max(layout, drive, ion, w, traj, i0, static)
    ke1 = _window_ke_max(layout, drive, ion, w, traj, i1, static)
    n_s = float(np.mean((ke1 - ke0) / (HBAR * omega_end)))
    return n_s, ke0, ke1


# -- instantaneous depth ---------------------------------------------------

def depth_trace(layout, drive, ion, w: Waveform, n_points=21, n_ions=2):
    """Escape energy (eV) of the well holding the outermost ion at ramp samples."""
    out = []
    guess = None
    for t in np.linspace(0.0, w.T, n_points):
        volts = waveform_at(w, t)
        eq = equilibrium_at(layout, drive, ion, volts, n_ions, guess)
        guess = eq
        ion_pos = eq[int(np.argmax(eq[:, 2]))]
        depth, _ = geo.depth_with_statics(layout, drive, ion, volts, ion_pos)
        out.append((t, depth))
    return np.array(out)


# -- full separation run -------------------------------------------------------

@dataclass
class HeatingModel:
    coefficient: float = HEATING_COEFFICIENT
    uncertainty: float = HEATING_UNCERTAINTY
    angular: bool = True
    h_um: float | None = None  # defaults to the rf-node height


@dataclass
class SeparationRun:
    waveform: Waveform
    trajectory: Trajectory
    omega: np.ndarray
    omega_min: float
    t_omega_min: float
    n_s: float
    n_an: float
    n_an_band: tuple
    n_total: float
    min_depth_eV: float | None
    ke: np.ndarray = field(repr=False)

    def summary(self):
        return {"omega_min_rad_s": self.omega_min, "t_omega_min_s": self.t_omega_min,
                "n_s": self.n_s, "n_an": self.n_an, "n_an_band": list(self.n_an_band),
                "n_total": self.n_total, "min_depth_eV": self.min_depth_eV,
                "T_s": self.waveform.T, "profile": self.waveform.profile.kind,
                "steepness": self.waveform.profile.steepness,
                "n_steps": self.trajectory.n_steps}

    def write_csv(self, path):
        """Trajectory table; ion 2 columns are empty for single-ion runs."""
        traj = self.trajectory
        n_ions = traj.positions.shape[1]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(TRAJECTORY_COLUMNS)
            for k, t in enumerate(traj.t):
                v = waveform_at(self.waveform, min(t, self.waveform.T))
                row = [t]
                for i in range(2):
                    if i < n_ions:
                        x, y, z = traj.positions[k, i]
                        row += [z, y, x]
                    else:
                        row += ["", "", ""]
                ke = list(self.ke[k]) + [""] * (2 - n_ions)
                row += ke[:2] + [self.omega[k], v.wedge, v.control]
                wr.writerow([_fmt(c) for c in row])


def _fmt(v):
    return v if isinstance(v, str) else repr(float(v))


def heating_height_um(layout, heating: HeatingModel):
    return heating.h_um if heating.h_um is not None else layout.node_analytic()[1] / UM


def run_separation(layout, drive, ion, w: Waveform, n_ions=2, tol: Tolerances = None,
                   heating: HeatingModel = None, temperature=0.0, seed=0,
                   with_depth=True, n_depth=21):
    """Integrate one ramp from the cold (or thermal) equilibrium and account quanta."""
    tol = tol or Tolerances()
    heating = heating or HeatingModel()
    eq = equilibrium_at(layout, drive, ion, w.start, n_ions)
    vel = np.zeros_like(eq)
    if temperature > 0:
        rng = np.random.default_rng(seed)
        vel = rng.normal(0.0, math.sqrt(1.380649e-23 * temperature / ion.mass), eq.shape)
    # the trace is smooth in time; evaluate on a fixed grid and interpolate
    grid_t = np.linspace(0.0, w.T, TRACE_POINTS)
    grid_w, _, _ = omega_z_trace(layout, w, ion, grid_t)
    omega_ends = grid_w[[0, -1]]
    traj = integrate(layout, drive, ion, w, IonState(eq, vel), tol,
                     omega_ref=float(grid_w.max()))
    omega = np.interp(traj.t, grid_t, grid_w)
    n_s, _, _ = quanta_from_shuttle(layout, drive, ion, w, traj, omega_ends[0], omega_ends[1])
    h_um = heating_height_um(layout, heating)
    n_an = quanta_from_heating(traj.t, omega, h_um, heating.coefficient, heating.angular)
    band = (n_an * (heating.coefficient - heating.uncertainty) / heating.coefficient,
            n_an * (heating.coefficient + heating.uncertainty) / heating.coefficient)
    i_min = int(np.argmin(omega))
    depth = None
    if with_depth:
        depth = float(depth_trace(layout, drive, ion, w, n_depth, n_ions)[:, 1].min())
    ke = 0.5 * ion.mass * (traj.velocities**2).sum(axis=2)
    return SeparationRun(w, traj, omega, float(omega[i_min]), float(traj.t[i_min]), n_s, n_an,
                         band, total_quanta(n_s, n_an), depth, ke)


# -- duration sweep ---------------------------------------------------------

@dataclass
class CrossingReport:
    durations: list
    n_s: list
    n_an: list
    power_law: tuple  # (A, p) with n_s ~ A T^-p
    heating_slope: float  # n_an ~ B T
    t_star: float | None
    n_star: float | None
    error: str | None = None

    def as_dict(self):
        return {"durations_s": self.durations, "n_s": self.n_s, "n_an": self.n_an,
                "n_s_fit": {"A": self.power_law[0], "p": self.power_law[1]},
                "n_an_slope_per_s": self.heating_slope, "t_star_s": self.t_star,
                "n_total_star": self.n_star, "error": self.error}


def fit_crossing(durations, n_s, n_an):
    """Power-law fit of ``n_s(T)``, linear fit of ``n_an(T)`` and their crossing."""
    T = np.asarray(durations, dtype=float)
    ns = np.asarray(n_s, dtype=float)
    na = np.asarray(n_an, dtype=float)
    if len(T) < 3:
        raise ValueError("a duration sweep needs at least 3 durations")
    B = float((na * T).sum() / (T * T).sum())
    pos = ns > 0
    if pos.sum() < 2:
        return CrossingReport(list(T), list(ns), list(na), (float("nan"), float("nan")), B,
                              None, None, "fewer than two positive n_s points")
    slope, icpt = np.polyfit(np.log(T[pos]), np.log(ns[pos]), 1)
    A, p = float(math.exp(icpt)), float(-slope)
    report = CrossingReport(list(map(float, T)), list(map(float, ns)), list(map(float, na)),
                            (A, p), B, None, None)
    if p <= -1 or B <= 0:
        report.error = "fitted trends cannot cross"
        return report
    t_star = (A / B) ** (1.0 / (1.0 + p))
    if not T.min() <= t_star <= T.max():
        report.error = f"crossing at {t_star:.3e} s lies outside the sweep"
        return report
    report.t_star = float(t_star)
    report.n_star = float(2 * B * t_star)
    return report


def sweep_duration(layout, drive, ion, start, end, kind, steepness, durations, n_ions=2,
                   tol=None, heating=None, runner=map):
    """Separation runs over a duration ladder and the n_s / n_an crossing.

    ``runner`` maps a function over the durations (``map`` or an executor's
    ``map``); results keep the input order.  Raises :class:`NoCrossing` with
    the report attached when the fitted trends do not intersect in range.
    """
    if len(durations) < 3:
        raise ValueError("a duration sweep needs at least 3 durations")
    jobs = [(layout, drive, ion, Waveform(start, end, RampProfile(kind, steepness, T)), n_ions,
             tol, heating) for T in durations]
    runs = list(runner(_sweep_job, jobs))
    report = fit_crossing(durations, [r["n_s"] for r in runs], [r["n_an"] for r in runs])
    report.runs = runs
    if report.error:
        err = NoCrossing(report.error)
        err.report = report
        raise err
    return report


def _sweep_job(job):
    layout, drive, ion, w, n_ions, tol, heating = job
    run = run_separation(layout, drive, ion, w, n_ions, tol, heating, with_depth=False)
    return run.summary()
