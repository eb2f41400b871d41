"""Planar-electrode potentials against quadrature, finite differences and Laplace."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from trapforge import electrostatics as es
from trapforge.errors import InvalidPoint

UM = 1e-6


def green_patch(patch, x, y, z):
    """Direct quadrature of the half-space Green's function over a patch."""
    def f(zp, xp):
        r2 = (x - xp) ** 2 + y * y + (z - zp) ** 2
        return y / (2 * math.pi * r2**1.5)
    val, _ = integrate.dblquad(f, patch.x_lo, patch.x_hi, patch.z_lo, patch.z_hi,
                               epsabs=1e-13, epsrel=1e-11)
    return val


def strip_atan(x_lo, x_hi, x, y):
    return (math.atan((x_hi - x) / y) - math.atan((x_lo - x) / y)) / math.pi


def fd_gradient(fun, p, step):
    """Fourth-order central differences."""
    p = np.asarray(p, dtype=float)
    g = np.zeros(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        g[k] = (-fun(p + 2 * e) + 8 * fun(p + e) - 8 * fun(p - e) + fun(p - 2 * e)) / (12 * step)
    return g


coord = st.floats(-200.0, 200.0)
height = st.floats(5.0, 200.0)
width = st.floats(5.0, 300.0)


@given(x_lo=coord, w=width, x=coord, y=height)
def test_strip_matches_arctangent_form(x_lo, w, x, y):
    s = es.StripElectrode(x_lo * UM, (x_lo + w) * UM)
    got = es.strip_basis(s, (x * UM, y * UM)).value
    assert got == pytest.approx(strip_atan(x_lo, x_lo + w, x, y), abs=1e-12)


@pytest.mark.parametrize("point", [(10.0, 40.0, 5.0), (-70.0, 15.0, 120.0), (55.0, 90.0, -30.0)])
def test_patch_matches_green_quadrature(point):
    patch = es.RectPatch(-20 * UM, 60 * UM, -40 * UM, 80 * UM)
    p = tuple(c * UM for c in point)
    assert es.patch_basis(patch, p).value == pytest.approx(green_patch(patch, *p), rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(x=coord, y=height, z=coord)
def test_patch_gradient_matches_finite_differences(x, y, z):
    patch = es.RectPatch(-30 * UM, 50 * UM, -60 * UM, 40 * UM)
    p = np.array([x, y, z]) * UM
    got = es.patch_basis(patch, p).gradient
    fd = fd_gradient(lambda q: float(es.patch_values(patch, q[0], q[1], q[2])), p, 0.05 * UM)
    scale = np.abs(got).max()
    assert np.abs(got - fd).max() <= 1e-6 * scale


@settings(max_examples=60, deadline=None)
@given(x=coord, y=height, z=coord)
def test_patch_hessian_is_traceless_and_matches_gradient(x, y, z):
    patch = es.RectPatch(-30 * UM, 50 * UM, -60 * UM, 40 * UM)
    p = np.array([x, y, z]) * UM
    s = es.patch_basis(patch, p)
    scale = np.abs(s.hessian).max()
    assert abs(np.trace(s.hessian)) <= 1e-9 * scale
    fd = np.array([fd_gradient(lambda q, k=k: es.patch_basis(patch, q).gradient[k], p, 0.05 * UM)
                   for k in range(3)])
    assert np.abs(fd - s.hessian).max() <= 1e-6 * scale


def test_laplace_residual_by_finite_differences():
    patch = es.RectPatch(-30 * UM, 50 * UM, -60 * UM, 40 * UM)
    rng = np.random.default_rng(1)
    pts = rng.uniform([-100, 10, -100], [100, 120, 100], (50, 3)) * UM
    step = 1.0 * UM

    def f(q):
        return float(es.patch_values(patch, *q))

    for p in pts:
        lap = 0.0
        curv = 0.0
        for k in range(3):
            e = np.zeros(3)
            e[k] = step
            d2 = (-f(p + 2 * e) + 16 * f(p + e) - 30 * f(p) + 16 * f(p - e)
                  - f(p - 2 * e)) / (12 * step**2)
            lap += d2
            curv = max(curv, abs(d2))
        assert abs(lap) <= 1e-5 * curv


def test_long_patch_reduces_to_strip():
    strip = es.StripElectrode(-20 * UM, 70 * UM)
    half_length = 1.0
    patch = es.RectPatch(-20 * UM, 70 * UM, -half_length, half_length)
    p = (13 * UM, 45 * UM, 0.0)
    s = es.strip_basis(strip, p)
    q = es.patch_basis(patch, p)
    # the two missing far ends contribute y w / (2 pi L^2) to leading order
    ends = p[1] * 90 * UM / (2 * math.pi * half_length**2)
    assert q.value == pytest.approx(s.value - ends, rel=1e-12)
    assert np.allclose(q.gradient, s.gradient, rtol=1e-8, atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(split=st.floats(0.05, 0.95), x=coord, y=height, z=coord)
def test_patch_superposition(split, x, y, z):
    z_lo, z_hi = -60 * UM, 40 * UM
    z_mid = z_lo + split * (z_hi - z_lo)
    whole = es.RectPatch(-30 * UM, 50 * UM, z_lo, z_hi)
    a = es.RectPatch(-30 * UM, 50 * UM, z_lo, z_mid)
    b = es.RectPatch(-30 * UM, 50 * UM, z_mid, z_hi)
    p = (x * UM, y * UM, z * UM)
    total = es.patch_basis(a, p) + es.patch_basis(b, p)
    ref = es.patch_basis(whole, p)
    assert total.value == pytest.approx(ref.value, abs=1e-13)
    assert np.allclose(total.hessian, ref.hessian, rtol=1e-9, atol=1e-9 * np.abs(ref.hessian).max())


def test_boundary_values_near_the_plane():
    patch = es.RectPatch(-30 * UM, 50 * UM, -60 * UM, 40 * UM)
    assert es.patch_basis(patch, (0.0, 1e-3 * UM, 0.0)).value == pytest.approx(1.0, abs=1e-4)
    assert es.patch_basis(patch, (100 * UM, 1e-3 * UM, 0.0)).value == pytest.approx(0.0, abs=1e-4)


def test_full_plane_of_strips_is_uniform():
    # three strips tiling a wide region act as one strip
    pieces = [es.StripElectrode(-100 * UM, -10 * UM), es.StripElectrode(-10 * UM, 40 * UM),
              es.StripElectrode(40 * UM, 200 * UM)]
    whole = es.StripElectrode(-100 * UM, 200 * UM)
    p = (20 * UM, 60 * UM)
    assert sum(es.strip_basis(s, p).value for s in pieces) == pytest.approx(
        es.strip_basis(whole, p).value, abs=1e-14)


def test_pseudopotential_is_field_magnitude_squared(ion):
    strips = [es.StripElectrode(-150 * UM, 0.0), es.StripElectrode(60 * UM, 360 * UM)]
    drive = es.RfDrive(450.0, 2 * math.pi * 55e6)
    p = (35 * UM, 70 * UM)
    field = sum(es.strip_basis(s, p).gradient for s in strips)
    k = ion.charge**2 * drive.v_rf**2 / (4 * ion.mass * drive.omega_rf**2)
    s = es.pseudopotential(strips, drive, ion, p)
    assert s.value == pytest.approx(k * field @ field, rel=1e-12)
    fd = fd_gradient(lambda q: es.pseudopotential(strips, drive, ion, q).value,
                     (p[0], p[1], 0.0), 0.05 * UM)
    assert np.abs(fd - s.gradient).max() <= 1e-6 * np.abs(s.gradient).max()


def test_points_on_the_plane_are_rejected():
    with pytest.raises(InvalidPoint):
        es.strip_basis(es.StripElectrode(0.0, 1.0), (0.0, 0.0))
    with pytest.raises(InvalidPoint):
        es.patch_basis(es.RectPatch(0.0, 1.0, 0.0, 1.0), (0.0, -1e-6, 0.0))


def test_invalid_parameters():
    with pytest.raises(ValueError):
        es.StripElectrode(1.0, 1.0)
    with pytest.raises(ValueError):
        es.RectPatch(0.0, 1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        es.RfDrive(-1.0, 1.0)
