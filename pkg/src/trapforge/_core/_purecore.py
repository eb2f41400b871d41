"""Numpy implementation of the integration kernels (fallback backend)."""
from __future__ import annotations

import math

import numpy as np

from . import _tableau

TWO_PI = 2.0 * math.pi

# Dormand-Prince 8(5,3) tableau, dense rows included
A_FULL = np.zeros((_tableau.N_STAGES_EXTENDED, _tableau.N_STAGES_EXTENDED))
for _i, _row in _tableau.A.items():
    for _j, _v in _row.items():
        A_FULL[_i, _j] = _v
C = np.array(_tableau.C)
B = np.array(_tableau.B)
E3 = np.array(_tableau.E3)
E5 = np.array(_tableau.E5)
D = np.array(_tableau.D)
N_STAGES = _tableau.N_STAGES
N_EXT = _tableau.N_STAGES_EXTENDED
ERR_EXPONENT = -1.0 / 8.0

SAFETY, MIN_FACTOR, MAX_FACTOR = 0.9, 0.2, 10.0


def profile(kind, steep, T, t):
    """Normalised S-shaped ramp fraction in [0, 1]."""
    if kind == 0:
        return 0.0
    s = min(max(t / T, 0.0), 1.0)
    if kind == 1:
        return 0.5 * (math.tanh(steep * (2.0 * s - 1.0)) / math.tanh(steep) + 1.0)
    return 0.5 * (math.erf(steep * (2.0 * s - 1.0)) / math.erf(steep) + 1.0)


def _voltages(v0, v1, kind, steep, T, t):
    p = profile(kind, steep, T, t)
    return v0 + (v1 - v0) * p


def _rf_G(rf, x, y):
    w = x + 1j * y
    d_hi = w[:, None] - rf[None, :, 1]
    d_lo = w[:, None] - rf[None, :, 0]
    G = (1.0 / d_hi - 1.0 / d_lo).sum(axis=1)
    G1 = (-1.0 / d_hi**2 + 1.0 / d_lo**2).sum(axis=1)
    return G, G1


def _patch_grad_value(patches, volts, x, y, z):
    """Static potential and its gradient for each ion (arrays over ions)."""
    val = np.zeros_like(x)
    gx = np.zeros_like(x)
    gy = np.zeros_like(x)
    gz = np.zeros_like(x)
    X, Y, Z = x[:, None], y[:, None], z[:, None]
    y2 = Y * Y
    for ix, iz, sign in ((1, 3, 1.0), (0, 2, 1.0), (1, 2, -1.0), (0, 3, -1.0)):
        u = patches[None, :, ix] - X
        v = patches[None, :, iz] - Z
        u2, v2 = u * u, v * v
        R2 = u2 + v2 + y2
        R = np.sqrt(R2)
        a = u2 + y2
        b = v2 + y2
        sv = sign * volts[None, :]
        val += (sv * np.arctan(u * v / (Y * R))).sum(axis=1)
        gx -= (sv * v * Y / (a * R)).sum(axis=1)
        gz -= (sv * u * Y / (b * R)).sum(axis=1)
        gy -= (sv * u * v * (R2 + y2) / (R * a * b)).sum(axis=1)
    k = 1.0 / TWO_PI
    return val * k, gx * k, gy * k, gz * k


def accel(rf, rf_coeff, patches, v0, v1, kind, steep, T, charge, mass, n_ions, coulomb,
          t, pos):
    pos = np.asarray(pos, dtype=float).reshape(n_ions, 3)
    x, y, z = pos[:, 0], pos[:, 1], pos[:, 2]
    G, G1 = _rf_G(rf, x, y)
    cG = np.conj(G)
    fx = -2.0 * rf_coeff * (cG * G1).real
    fy = -2.0 * rf_coeff * (cG * 1j * G1).real
    fz = np.zeros_like(x)
    if len(patches):
        volts = _voltages(v0, v1, kind, steep, T, t)
        _, gx, gy, gz = _patch_grad_value(patches, volts, x, y, z)
        fx -= charge * gx
        fy -= charge * gy
        fz -= charge * gz
    f = np.stack([fx, fy, fz], axis=1)
    for i in range(n_ions):
        for j in range(i + 1, n_ions):
            d = pos[i] - pos[j]
            r = math.sqrt(d @ d)
            fc = coulomb * d / r**3
            f[i] += fc
            f[j] -= fc
    return f / mass


def potential_energy(rf, rf_coeff, patches, v0, v1, kind, steep, T, charge, mass, n_ions,
                     coulomb, t, pos):
    pos = np.asarray(pos, dtype=float).reshape(n_ions, 3)
    x, y, z = pos[:, 0], pos[:, 1], pos[:, 2]
    G, _ = _rf_G(rf, x, y)
    u = rf_coeff * float((np.abs(G) ** 2).sum())
    if len(patches):
        volts = _voltages(v0, v1, kind, steep, T, t)
        val, _, _, _ = _patch_grad_value(patches, volts, x, y, z)
        u += charge * float(val.sum())
    for i in range(n_ions):
        for j in range(i + 1, n_ions):
            d = pos[i] - pos[j]
            u += coulomb / math.sqrt(d @ d)
    return u


def _check(y, n_ions, y_max, z_max, min_dist):
    pos = y[: 3 * n_ions].reshape(n_ions, 3)
    if np.any(pos[:, 1] <= 0.0) or np.any(pos[:, 1] > y_max):
        return 1
    if np.any(np.abs(pos[:, 2]) > z_max):
        return 2
    for i in range(n_ions):
        for j in range(i + 1, n_ions):
            d = pos[i] - pos[j]
            if d @ d < min_dist * min_dist:
                return 3
    return 0


def _dense_coefficients(f, t, y, y_new, h, K):
    """Evaluate the extra stages and return the interpolant coefficients."""
    for s in range(N_STAGES + 1, N_EXT):
        K[s] = f(t + C[s] * h, y + h * (A_FULL[s, :s] @ K[:s]))
    dy = y_new - y
    return [dy, h * K[0] - dy, 2 * dy - h * (K[N_STAGES] + K[0])] + list(h * (D @ K))


def _interpolate(F, y, theta):
    out = np.zeros_like(y)
    for i, f in enumerate(reversed(F)):
        out += f
        out *= theta if i % 2 == 0 else 1.0 - theta
    return out + y


def integrate(rf, rf_coeff, patches, v0, v1, kind, steep, T, charge, mass, n_ions, coulomb,
              y0, t0, t1, t_eval, rtol, atol_x, atol_v, h0, max_steps, y_max, z_max,
              min_dist):
    args = (rf, rf_coeff, patches, v0, v1, kind, steep, T, charge, mass, n_ions, coulomb)
    n3 = 3 * n_ions
    dim = 2 * n3
    atol = np.concatenate([np.full(n3, atol_x), np.full(n3, atol_v)])

    def f(t, y):
        out = np.empty(dim)
        out[:n3] = y[n3:]
        out[n3:] = accel(*args, t, y[:n3]).ravel()
        return out

    y_out = np.full((len(t_eval), dim), np.nan)
    t = float(t0)
    y = np.array(y0, dtype=float)
    K = np.empty((N_EXT, dim))
    K[0] = f(t, y)
    n_fev = 1
    n_steps = 0
    i_out = 0
    while i_out < len(t_eval) and t_eval[i_out] <= t:
        y_out[i_out] = y
        i_out += 1
    span = t1 - t0
    h = h0 if h0 > 0 else 1e-3 * span
    status = 0
    rejected = False
    while t < t1:
        if n_steps >= max_steps:
            status = 4
            break
        h = min(h, t1 - t)
        if h < 1e-14 * max(abs(t), span):
            status = 4
            break
        for s in range(1, N_STAGES):
            K[s] = f(t + C[s] * h, y + h * (A_FULL[s, :s] @ K[:s]))
        y_new = y + h * (B @ K[:N_STAGES])
        K[N_STAGES] = f(t + h, y_new)
        n_fev += N_STAGES
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        e5 = float(np.sum(((E5 @ K[:N_STAGES + 1]) / scale) ** 2))
        e3 = float(np.sum(((E3 @ K[:N_STAGES + 1]) / scale) ** 2))
        err = 0.0 if e5 == 0.0 and e3 == 0.0 else h * e5 / math.sqrt((e5 + 0.01 * e3) * dim)
        if err <= 1.0:
            t_new = t + h
            if i_out < len(t_eval) and t_eval[i_out] <= t_new:
                F = _dense_coefficients(f, t, y, y_new, h, K)
                n_fev += N_EXT - N_STAGES - 1
                while i_out < len(t_eval) and t_eval[i_out] <= t_new:
                    y_out[i_out] = _interpolate(F, y, (t_eval[i_out] - t) / h)
                    i_out += 1
            t, y = t_new, y_new
            K[0] = K[N_STAGES]
            n_steps += 1
            status = _check(y, n_ions, y_max, z_max, min_dist)
            if status:
                break
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err**ERR_EXPONENT)
            if rejected:
                factor = min(1.0, factor)
            rejected = False
        else:
            factor = max(MIN_FACTOR, SAFETY * err**ERR_EXPONENT)
            rejected = True
        h *= factor
    return y_out, status, n_steps, n_fev, t
