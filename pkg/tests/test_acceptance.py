"""Acceptance criteria, one test per criterion, each reporting a PASS/FAIL line.

Run on its own with ``python3 -m pytest tests/test_acceptance.py -s`` or
``python3 tests/test_acceptance.py``; the lines are also collected into the
terminal summary of a full ``pytest`` run.
"""
import math
import subprocess
import sys
import time
from pathlib import Path

import pytest

from trapforge import axial as ax
from trapforge import constraints as cons
from trapforge import geometry as geo
from trapforge import shuttling as sh

UM = 1e-6
LINES = []


def record(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    LINES.append(line)
    print(line)
    return ok


def within(value, target, tol):
    return abs(value - target) <= tol


# -- 1, 2: geometric optimum -----------------------------------------------------

def test_criterion_1_zeta_optimum():
    t0 = time.perf_counter()
    z_eq, _ = geo.optimize_zeta("equal")
    z_half, _ = geo.optimize_zeta("half")
    dt = time.perf_counter() - t0
    ok = within(z_eq, 3.68, 0.05) and within(z_half, 4.9, 0.1) and dt < 1.0
    assert record(1, ok, f"zeta*_equal={z_eq:.4f} (3.68+-0.05), zeta*_half={z_half:.4f} "
                         f"(4.9+-0.1), runtime {dt:.3f} s (<1 s)")


def test_criterion_2_ion_height_at_optimum():
    ratios = {}
    for mode in ("equal", "half"):
        z, _ = geo.optimize_zeta(mode)
        ratios[mode] = geo.rf_node_analytic(geo.FiveWireParams.from_zeta(z, 1.0, mode))[1]
    ok_eq = within(ratios["equal"], 1.43, 0.02)
    ok_half = within(ratios["half"], 1.27, 0.02)
    assert record(2, ok_eq and ok_half,
                  f"h/a equal={ratios['equal']:.4f} (1.43+-0.02, {'ok' if ok_eq else 'out'}), "
                  f"half={ratios['half']:.4f} (1.27+-0.02, {'ok' if ok_half else 'out'})")


# -- 3, 4: axial optimum -------------------------------------------------------

@pytest.fixture(scope="module")
def axial_optima():
    t0 = time.perf_counter()
    res = {d: ax.optimal_widths(d) for d in geo.DESIGNS}
    return res, time.perf_counter() - t0


def test_criterion_3_segment_widths(axial_optima):
    res, dt = axial_optima
    w_out, r_out = res["outer_segmented"]
    w_cen, r_cen = res["centre_segmented"]
    ok = (within(r_out, 1.1, 0.1) and within(r_cen, 1.1, 0.1)
          and within(w_out, 3.66, 0.366) and within(w_cen, 1.0, 0.1) and dt < 60)
    assert record(3, ok, f"(W/E)* outer={r_out:.4f} centre={r_cen:.4f} (1.1+-0.1); "
                         f"W*/a outer={w_out:.4f} (3.66+-10%) centre={w_cen:.4f} (1+-10%); "
                         f"runtime {dt:.1f} s (<60 s)")


def test_criterion_4_beta_ratio(axial_optima):
    res, _ = axial_optima
    widths = {d: res[d][0] for d in geo.DESIGNS}
    row = ax.compare_designs([60 * UM], widths=widths)[0]
    ok = row["beta_ratio"] >= 30
    assert record(4, ok, f"beta_centre/beta_outer at a=60 um = {row['beta_ratio']:.1f} (>=30)")


# -- 5: example trap -----------------------------------------------------------

def test_criterion_5_example_trap(outer_layout, drive450, ion, outer_start):
    info = geo.rf_node_numeric(outer_layout, drive450, ion, with_modes=False)
    wx, wy, _ = geo.radial_modes(outer_layout, drive450, ion, voltages=outer_start,
                                 node=(info.x0, info.h))
    q = cons.stability_q(drive450, ion, info.h)
    p475 = cons.power_dissipation(475.0, drive450.omega_rf, cons.ChipBudget())
    f_lo, f_hi = 0.8 * 4.2e6, 1.2 * 4.2e6
    fx, fy = wx / (2 * math.pi), wy / (2 * math.pi)
    ok = (0.25 <= info.depth <= 0.36 and f_lo <= fx <= f_hi and f_lo <= fy <= f_hi
          and 0.55 <= q <= 0.75 and p475 < 3.0)
    assert record(5, ok, f"depth={info.depth:.4f} eV [0.25,0.36]; radial {fx / 1e6:.3f}, "
                         f"{fy / 1e6:.3f} MHz (4.2+-20%); q={q:.4f} [0.55,0.75]; "
                         f"P_d(475 V)={p475:.3f} W (<3)")


# -- 6, 7: separation dynamics ------------------------------------------------------

OUTER_DURATIONS = [1e-3, 2e-3, 4e-3, 8e-3]
CENTRE_DURATIONS = [100e-6, 200e-6, 400e-6, 800e-6]


def _sweep(layout, drive, ion, start, end, steepness, durations):
    runs, times = [], []
    for T in durations:
        t0 = time.perf_counter()
        w = sh.Waveform(start, end, sh.RampProfile("tanh", steepness, T))
        runs.append(sh.run_separation(layout, drive, ion, w, with_depth=False))
        times.append(time.perf_counter() - t0)
    report = sh.fit_crossing(durations, [r.n_s for r in runs], [r.n_an for r in runs])
    return runs, times, report


@pytest.fixture(scope="module")
def sweeps(outer_layout, centre_layout, drive450, drive500, ion, outer_start, outer_end,
           centre_start, centre_end):
    return {
        "outer4": _sweep(outer_layout, drive450, ion, outer_start, outer_end, 4.0, OUTER_DURATIONS),
        "outer3": _sweep(outer_layout, drive450, ion, outer_start, outer_end, 3.0, OUTER_DURATIONS),
        "centre4": _sweep(centre_layout, drive500, ion, centre_start, centre_end, 4.0,
                          CENTRE_DURATIONS),
    }


def test_criterion_6_separation_frequencies_and_depth(sweeps, outer_layout, centre_layout,
                                                     drive450, drive500, ion):
    parts, ok = [], True
    cases = (("outer", sweeps["outer4"], outer_layout, drive450, 42e3, 500e3),
             ("centre", sweeps["centre4"], centre_layout, drive500, 230e3, 1.15e6))
    for name, (runs, times, _), layout, drive, w_min_ref, w_end_ref in cases:
        w_min = min(r.omega_min for r in runs) / (2 * math.pi)
        w_end = runs[0].omega[-1] / (2 * math.pi)
        depth = sh.depth_trace(layout, drive, ion, runs[0].waveform)[:, 1].min()
        good = (within(w_min, w_min_ref, 0.25 * w_min_ref)
                and within(w_end, w_end_ref, 0.2 * w_end_ref)
                and depth >= 0.2 and max(times) < 600)
        ok &= good
        parts.append(f"{name}: w_min={w_min / 1e3:.1f} kHz ({w_min_ref / 1e3:g}+-25%), "
                     f"w_end={w_end / 1e3:.1f} kHz ({w_end_ref / 1e3:g}+-20%), "
                     f"min depth={depth:.3f} eV (>=0.2), slowest run {max(times):.1f} s (<600)")
    assert record(6, ok, "; ".join(parts))


def _monotone(xs, decreasing):
    pairs = list(zip(xs, xs[1:]))
    return all(b < a for a, b in pairs) if decreasing else all(b > a for a, b in pairs)


def test_criterion_7_crossing_points(sweeps):
    parts, ok = [], True
    for key in ("outer4", "outer3", "centre4"):
        runs, _, rep = sweeps[key]
        good = (_monotone([r.n_s for r in runs], True) and _monotone([r.n_an for r in runs], False)
                and rep.t_star is not None)
        ok &= good
        star = f"T*={rep.t_star * 1e6:.0f} us n*={rep.n_star:.0f}" if rep.t_star else rep.error
        parts.append(f"{key}: monotone={'yes' if good else 'no'}, {star}")
    o4, o3, c4 = (sweeps[k][2] for k in ("outer4", "outer3", "centre4"))
    if ok:
        ok = (c4.n_star < o4.n_star and o3.t_star < o4.t_star
              and 0.5 <= o3.n_star / o4.n_star <= 2.0)
        parts.append(f"n*_centre<n*_outer: {c4.n_star < o4.n_star}; T*(N=3)<T*(N=4): "
                     f"{o3.t_star < o4.t_star}; n*(N=3)/n*(N=4)={o3.n_star / o4.n_star:.2f}")
    assert record(7, ok, "; ".join(parts))


# -- 8: numerical property suites -------------------------------------------------

PROPERTY_TESTS = [
    "test_electrostatics.py::test_laplace_residual_by_finite_differences",
    "test_electrostatics.py::test_patch_gradient_matches_finite_differences",
    "test_electrostatics.py::test_patch_hessian_is_traceless_and_matches_gradient",
    "test_axial.py::test_fit_round_trip",
    "test_shuttling.py::test_static_run_conserves_energy",
    "test_shuttling.py::test_two_ion_equilibrium_matches_force_balance",
    "test_constraints.py::test_depth_relation_is_identity",
]


def test_criterion_8_property_suites():
    here = Path(__file__).parent
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           *[str(here / t) for t in PROPERTY_TESTS]],
                          capture_output=True, text=True, cwd=here.parent)
    dt = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and dt < 120
    assert record(8, ok, f"{len(PROPERTY_TESTS)} property suites: {tail}; {dt:.1f} s (<120 s)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
