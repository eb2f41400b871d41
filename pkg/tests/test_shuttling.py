"""Ramps, equilibria, secular-motion integration and quanta accounting."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from trapforge import _core
from trapforge import axial as ax
from trapforge import electrostatics as es
from trapforge import shuttling as sh
from trapforge.constants import EPS0
from trapforge.errors import IonLost, NoTrappingPoint, WindowTooShort

UM = 1e-6


# -- ramps ---------------------------------------------------------------

@given(kind=st.sampled_from(sh.PROFILE_KINDS), n=st.floats(0.2, 10.0), T=st.floats(1e-6, 1e-2),
       u=st.floats(0.0, 1.0), v=st.floats(0.0, 1.0))
def test_profile_is_monotone_and_antisymmetric(kind, n, T, u, v):
    p = sh.RampProfile(kind, n, T)
    lo, hi = sorted((u * T, v * T))
    assert sh.profile_value(p, lo) <= sh.profile_value(p, hi) + 1e-15
    assert sh.profile_value(p, T - u * T) == pytest.approx(1 - sh.profile_value(p, u * T), abs=1e-12)


@given(kind=st.sampled_from(sh.PROFILE_KINDS), n=st.floats(0.2, 8.0), u=st.floats(0.01, 0.99))
def test_profile_rate_matches_finite_difference(kind, n, u):
    T = 1e-4
    p = sh.RampProfile(kind, n, T)
    h = 1e-6 * T
    t = u * T
    fd = (sh.profile_value(p, t + h) - sh.profile_value(p, t - h)) / (2 * h)
    assert sh.profile_rate(p, t) == pytest.approx(fd, rel=1e-6, abs=1e-6 / T)


def test_waveform_endpoints_are_exact(outer_start, outer_end):
    for kind in sh.PROFILE_KINDS:
        w = sh.Waveform(outer_start, outer_end, sh.RampProfile(kind, 3.7, 123e-6))
        assert sh.waveform_at(w, 0.0) == outer_start
        assert sh.waveform_at(w, w.T) == outer_end
        assert w.reversed().start == outer_end
    with pytest.raises(ValueError):
        sh.waveform_at(w, 1.1 * w.T)


def test_matched_erf_has_same_midpoint_slope():
    for n in (1.0, 4.0, 8.0):
        m = sh.matched_erf_steepness(n)
        t = sh.RampProfile("tanh", n, 1.0)
        e = sh.RampProfile("erf", m, 1.0)
        assert sh.profile_rate(e, 0.5) == pytest.approx(sh.profile_rate(t, 0.5), rel=1e-10)


def test_profile_validation():
    with pytest.raises(ValueError):
        sh.RampProfile("linear", 1.0, 1.0)
    with pytest.raises(ValueError):
        sh.RampProfile("tanh", 0.0, 1.0)


# -- equilibria -------------------------------------------------------------

def test_two_ion_equilibrium_matches_force_balance(outer_layout, drive450, ion, outer_start):
    eq = sh.equilibrium_at(outer_layout, drive450, ion, outer_start, 2)
    s = abs(eq[1, 2] - eq[0, 2])
    x0, h = outer_layout.node_analytic()
    patches = outer_layout.static_patches(outer_start)
    kc = ion.charge / (4 * math.pi * EPS0)

    def axial_force(z):
        dz = 1e-3 * UM
        dphi = (es.static_values(patches, x0, h, z + dz) - es.static_values(patches, x0, h, z - dz))
        return -float(dphi) / (2 * dz)

    # 1-D oracle along the rf node line: trap force on the right ion balances Coulomb
    s_oracle = brentq(lambda s: -axial_force(s / 2) - kc / s**2, 0.5 * UM, 200 * UM)
    assert s == pytest.approx(s_oracle, rel=0.005)
    # and the total force on each ion vanishes
    for i in range(2):
        f = -es.total_effective_potential(outer_layout, drive450, ion, outer_start, eq[i]).gradient
        d = eq[i] - eq[1 - i]
        f += ion.charge**2 / (4 * math.pi * EPS0) * d / np.linalg.norm(d) ** 3
        assert np.abs(f).max() < 1e-9 * ion.charge * kc / s**2


def test_two_ion_equilibrium_in_pure_quartic_well(centre_layout, drive500, ion, centre_start):
    fit = ax.fit_adaptive(centre_layout, centre_start, charge=ion.charge)
    eq = sh.equilibrium_at(centre_layout, drive500, ion, centre_start, 2)
    s = abs(eq[1, 2] - eq[0, 2])
    e = ion.charge
    kc = e / (4 * math.pi * EPS0)
    s_fit = brentq(lambda s: 2 * fit.alpha * s / 2 + 4 * fit.beta * (s / 2) ** 3 - kc / s**2,
                   0.1 * UM, 100 * UM)
    assert s == pytest.approx(s_fit, rel=0.005)


def test_anti_trapping_voltages_have_no_equilibrium(outer_layout, drive450, ion):
    with pytest.raises(NoTrappingPoint):
        sh.equilibrium_at(outer_layout, drive450, ion,
                          ax.VoltageSet(endcap=-30.0, wedge=30.0, control=0.0), 1,
                          guess=np.array([[20 * UM, 82 * UM, 0.0]]))


# -- integration ------------------------------------------------------------

def _static_run(layout, drive, ion, volts, kick, periods, samples_per_period=64):
    w = sh.Waveform(volts, volts, sh.RampProfile("tanh", 4.0, 1e-6))
    eq = sh.equilibrium_at(layout, drive, ion, volts, 1)
    _, _, H = sh._energy_derivatives(layout, drive, ion, volts, eq)
    omega_z = math.sqrt(H[2, 2] / ion.mass)
    t_end = periods * 2 * math.pi / omega_z
    t_eval = np.linspace(0.0, t_end, max(periods * samples_per_period, 1) + 1)
    traj = sh.integrate(layout, drive, ion, w, sh.IonState(eq + kick, np.zeros((1, 3))),
                        t_eval=t_eval, omega_ref=omega_z, static=True, t_end=t_end)
    return w, eq, omega_z, traj


def test_static_run_conserves_energy(outer_layout, drive450, ion, outer_start):
    kick = np.array([[0.05 * UM, 0.05 * UM, 0.5 * UM]])
    drift = {}
    for spp in (0, 64):
        # spp = 0 samples only the start and the end of the run
        w, eq, _, traj = _static_run(outer_layout, drive450, ion, outer_start, kick, 100,
                                     samples_per_period=spp)
        assert len(traj.t) == (2 if spp == 0 else 100 * spp + 1)
        energy = sh.total_energy(outer_layout, drive450, ion, w, traj, static=True)
        u_min = sh._ion_energy(outer_layout, drive450, ion, outer_start, eq)
        drift[spp] = np.abs(energy - energy[0]).max() / (energy[0] - u_min)
    # accumulated drift over 100 axial periods at the default tolerances
    assert drift[0] < 1e-6
    # dense output between steps adds a bounded interpolation error
    assert drift[64] < 1e-5


def test_small_oscillation_frequency(outer_layout, drive450, ion, outer_start):
    kick = np.array([[0.0, 0.0, 0.02 * UM]])
    _, eq, omega_z, traj = _static_run(outer_layout, drive450, ion, outer_start, kick, 20)
    z = traj.positions[:, 0, 2] - eq[0, 2]
    t = traj.t
    up = np.nonzero((z[:-1] < 0) & (z[1:] >= 0))[0]
    tc = t[up] - z[up] * (t[up + 1] - t[up]) / (z[up + 1] - z[up])
    period = (tc[-1] - tc[0]) / (len(tc) - 1)
    assert 2 * math.pi / period == pytest.approx(omega_z, rel=1e-3)


def test_escaping_ion_raises_ion_lost(outer_layout, drive450, ion, outer_start):
    w = sh.Waveform(outer_start, outer_start, sh.RampProfile("tanh", 4.0, 5e-6))
    eq = sh.equilibrium_at(outer_layout, drive450, ion, outer_start, 1)
    with pytest.raises(IonLost) as err:
        sh.integrate(outer_layout, drive450, ion, w, sh.IonState(eq, [[0.0, 2000.0, 0.0]]))
    assert err.value.t is not None and err.value.voltages is not None


def test_backends_agree(outer_layout, drive450, ion, outer_start, outer_end):
    bk = _core.backends()
    if len(bk) < 2:
        pytest.skip("compiled backend not built")
    w = sh.Waveform(outer_start, outer_end, sh.RampProfile("tanh", 4.0, 1e-6))
    model = sh.pack_model(outer_layout, drive450, ion, w, 2)
    eq = sh.equilibrium_at(outer_layout, drive450, ion, outer_start, 2)
    pos = eq + np.array([[0.1, -0.2, 0.3], [0.0, 0.1, -0.4]]) * UM
    for t in (0.0, 0.3e-6, 1e-6):
        a_p = _core.accel(model, t, pos, backend=bk["pure"])
        a_c = _core.accel(model, t, pos, backend=bk["compiled"])
        assert np.allclose(a_p, a_c, rtol=1e-12, atol=1e-12 * np.abs(a_p).max())
        assert _core.potential_energy(model, t, pos, backend=bk["pure"]) == pytest.approx(
            _core.potential_energy(model, t, pos, backend=bk["compiled"]), rel=1e-12)
    y0 = np.concatenate([pos.ravel(), np.zeros(6)])
    t_eval = np.linspace(0, 1e-6, 11)
    out_p = _core.integrate(model, y0, 0.0, 1e-6, t_eval, atol_v=1e-7, backend=bk["pure"])
    out_c = _core.integrate(model, y0, 0.0, 1e-6, t_eval, atol_v=1e-7, backend=bk["compiled"])
    assert out_p[1:4] == out_c[1:4]
    assert np.allclose(out_p[0], out_c[0], rtol=1e-10, atol=1e-15)


def test_accel_is_minus_energy_gradient(outer_layout, drive450, ion, outer_start, outer_end):
    w = sh.Waveform(outer_start, outer_end, sh.RampProfile("tanh", 4.0, 1e-6))
    model = sh.pack_model(outer_layout, drive450, ion, w, 2)
    pos = np.array([[20e-6, 80e-6, -3e-6], [21e-6, 84e-6, 4e-6]])
    t = 0.4e-6
    acc = _core.accel(model, t, pos)
    step = 1e-10
    for i in range(2):
        for k in range(3):
            p1, p2 = pos.copy(), pos.copy()
            p1[i, k] += step
            p2[i, k] -= step
            g = (_core.potential_energy(model, t, p1) - _core.potential_energy(model, t, p2)) / (2 * step)
            assert -g / ion.mass == pytest.approx(acc[i, k], rel=1e-5, abs=1e-6 * np.abs(acc).max())


# -- axial trace and quanta ---------------------------------------------------

def test_trace_endpoints_match_direct_fits(outer_layout, ion, outer_start, outer_end):
    w = sh.Waveform(outer_start, outer_end, sh.RampProfile("tanh", 4.0, 1e-3))
    omega, _, _ = sh.omega_z_trace(outer_layout, w, ion, [0.0, w.T])
    for v, om in ((outer_start, omega[0]), (outer_end, omega[1])):
        fit = ax.fit_adaptive(outer_layout, v, charge=ion.charge)
        assert om == pytest.approx(ax.axial_frequency(fit, ion), rel=1e-9)


def test_heating_integral_for_constant_frequency():
    t = np.linspace(0.0, 2e-3, 101)
    omega = np.full_like(t, 2 * math.pi * 300e3)
    n = sh.quanta_from_heating(t, omega, 82.5)
    ref = sh.HEATING_COEFFICIENT / (omega[0] ** 2 * 82.5**4) * 2e-3
    assert n == pytest.approx(ref, rel=1e-12)
    # with ``angular=False`` the rate uses the cyclic frequency omega / 2 pi
    cyc = sh.anomalous_rate(2 * math.pi * 300e3, 82.5, angular=False)
    assert cyc == pytest.approx(sh.HEATING_COEFFICIENT / (300e3**2 * 82.5**4))
    with pytest.raises(ValueError):
        sh.anomalous_rate(0.0, 82.5)


def test_fit_crossing_recovers_synthetic_trends():
    p, B = 2.5, 4e5
    A = B * 3e-4 ** (1 + p)  # crossing at 300 us
    T = np.array([1e-4, 2e-4, 4e-4, 8e-4])
    rep = sh.fit_crossing(T, A * T**-p, B * T)
    t_star = (A / B) ** (1 / (1 + p))
    assert rep.t_star == pytest.approx(t_star, rel=1e-9)
    assert rep.n_star == pytest.approx(2 * B * t_star, rel=1e-9)
    out = sh.fit_crossing(T, 1e-9 * T**-p, B * T)
    assert out.t_star is None and "outside" in out.error


def test_resting_ion_has_no_shuttling_quanta(outer_layout, drive450, ion, outer_start):
    w, eq, omega_z, traj = _static_run(outer_layout, drive450, ion, outer_start,
                                       np.zeros((1, 3)), 10)
    n_s, ke0, ke1 = sh.quanta_from_shuttle(outer_layout, drive450, ion, w, traj, omega_z,
                                           omega_z, static=True)
    assert abs(n_s) < 1e-3
    with pytest.raises(WindowTooShort):
        sh.quanta_from_shuttle(outer_layout, drive450, ion, w, traj, omega_z / 5, omega_z / 5,
                               static=True)


def test_separation_run_is_deterministic(centre_layout, drive500, ion, centre_start, centre_end):
    w = sh.Waveform(centre_start, centre_end, sh.RampProfile("tanh", 4.0, 60e-6))
    runs = [sh.run_separation(centre_layout, drive500, ion, w, temperature=1e-4, seed=7,
                              with_depth=False) for _ in range(2)]
    assert runs[0].n_s == runs[1].n_s
    assert np.array_equal(runs[0].trajectory.positions, runs[1].trajectory.positions)
    final = runs[0].trajectory.positions[-1]
    assert final[0, 2] < 0 < final[1, 2]


def test_pure_backend_is_selected_by_environment():
    import os
    import subprocess
    import sys
    env = dict(os.environ, TRAPFORGE_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import trapforge; print(trapforge.BACKEND)"],
                         capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "pure"
