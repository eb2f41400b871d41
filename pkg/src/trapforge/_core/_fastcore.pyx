# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled integration kernels; same API as ``_purecore``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport atan, erf, fabs, fmax, fmin, pow, sqrt, tanh

cnp.import_array()

cdef double TWO_PI = 6.283185307179586

# Dormand-Prince 8(5,3) tableau with dense rows, copied from ``_tableau`` at import
cdef enum:
    NS = 12
    NX = 16
cdef double A8[NX][NX]
cdef double C8[NX]
cdef double B8[NS]
cdef double E3_[NS + 1]
cdef double E5_[NS + 1]
cdef double D8[4][NX]


def _load_tableau():
    from . import _tableau as tb
    cdef int i, j
    for i in range(NX):
        C8[i] = tb.C[i]
        for j in range(NX):
            A8[i][j] = 0.0
        for k in range(4):
            D8[k][i] = tb.D[k][i]
    for i, row in tb.A.items():
        for j, v in row.items():
            A8[i][j] = v
    for i in range(NS):
        B8[i] = tb.B[i]
    for i in range(NS + 1):
        E3_[i] = tb.E3[i]
        E5_[i] = tb.E5[i]


_load_tableau()


cdef struct Model:
    double* rf
    int n_rf
    double rf_coeff
    double* patches
    double* v0
    double* v1
    double* volts
    int n_patch
    int kind
    double steep
    double T
    double charge
    double mass
    int n_ions
    double coulomb


cdef double c_profile(int kind, double steep, double T, double t) nogil:
    cdef double s
    if kind == 0:
        return 0.0
    s = fmin(fmax(t / T, 0.0), 1.0)
    if kind == 1:
        return 0.5 * (tanh(steep * (2.0 * s - 1.0)) / tanh(steep) + 1.0)
    return 0.5 * (erf(steep * (2.0 * s - 1.0)) / erf(steep) + 1.0)


def profile(int kind, double steep, double T, double t):
    return c_profile(kind, steep, T, t)


cdef void set_volts(Model* m, double t) nogil:
    cdef double p = c_profile(m.kind, m.steep, m.T, t)
    cdef int i
    for i in range(m.n_patch):
        m.volts[i] = m.v0[i] + (m.v1[i] - m.v0[i]) * p


cdef void rf_G(Model* m, double x, double y, double* G, double* G1) nogil:
    """Sum over strips of 1/(w - x_hi) - 1/(w - x_lo) and its derivative."""
    cdef int s
    cdef double ar, ai, br, bi, na, nb, ra, ia, rb, ib
    G[0] = 0.0; G[1] = 0.0; G1[0] = 0.0; G1[1] = 0.0
    for s in range(m.n_rf):
        ar = x - m.rf[2 * s + 1]; ai = y
        br = x - m.rf[2 * s]; bi = y
        na = ar * ar + ai * ai
        nb = br * br + bi * bi
        # 1/d = conj(d)/|d|^2
        ra = ar / na; ia = -ai / na
        rb = br / nb; ib = -bi / nb
        G[0] += ra - rb
        G[1] += ia - ib
        # -1/d^2 for hi, +1/d^2 for lo
        G1[0] += -(ra * ra - ia * ia) + (rb * rb - ib * ib)
        G1[1] += -(2.0 * ra * ia) + 2.0 * rb * ib


cdef void static_terms(Model* m, double x, double y, double z, double* out, bint want_val) nogil:
    """out = [phi, dphi/dx, dphi/dy, dphi/dz] for the current voltages."""
    cdef int p, c
    cdef double u, v, u2, v2, y2, R2, R, a, b, sv, k
    cdef double xs[2]
    cdef double zs[2]
    cdef int cx[4]
    cdef int cz[4]
    cdef double sg[4]
    cx[0] = 1; cz[0] = 1; sg[0] = 1.0
    cx[1] = 0; cz[1] = 0; sg[1] = 1.0
    cx[2] = 1; cz[2] = 0; sg[2] = -1.0
    cx[3] = 0; cz[3] = 1; sg[3] = -1.0
    out[0] = 0.0; out[1] = 0.0; out[2] = 0.0; out[3] = 0.0
    y2 = y * y
    for p in range(m.n_patch):
        if m.volts[p] == 0.0:
            continue
        xs[0] = m.patches[4 * p]; xs[1] = m.patches[4 * p + 1]
        zs[0] = m.patches[4 * p + 2]; zs[1] = m.patches[4 * p + 3]
        for c in range(4):
            u = xs[cx[c]] - x
            v = zs[cz[c]] - z
            u2 = u * u; v2 = v * v
            R2 = u2 + v2 + y2
            R = sqrt(R2)
            a = u2 + y2
            b = v2 + y2
            sv = sg[c] * m.volts[p]
            if want_val:
                out[0] += sv * atan(u * v / (y * R))
            out[1] -= sv * v * y / (a * R)
            out[3] -= sv * u * y / (b * R)
            out[2] -= sv * u * v * (R2 + y2) / (R * a * b)
    k = 1.0 / TWO_PI
    out[0] *= k; out[1] *= k; out[2] *= k; out[3] *= k


cdef void c_accel(Model* m, double t, double* pos, double* acc) nogil:
    cdef int i, j
    cdef double G[2]
    cdef double G1[2]
    cdef double st[4]
    cdef double dx, dy, dz, r2, r3, f, inv_m
    set_volts(m, t)
    inv_m = 1.0 / m.mass
    for i in range(m.n_ions):
        rf_G(m, pos[3 * i], pos[3 * i + 1], G, G1)
        # conj(G) * G1 and conj(G) * i G1
        acc[3 * i] = -2.0 * m.rf_coeff * (G[0] * G1[0] + G[1] * G1[1])
        acc[3 * i + 1] = -2.0 * m.rf_coeff * (G[1] * G1[0] - G[0] * G1[1])
        acc[3 * i + 2] = 0.0
        if m.n_patch > 0:
            static_terms(m, pos[3 * i], pos[3 * i + 1], pos[3 * i + 2], st, False)
            acc[3 * i] -= m.charge * st[1]
            acc[3 * i + 1] -= m.charge * st[2]
            acc[3 * i + 2] -= m.charge * st[3]
    for i in range(m.n_ions):
        for j in range(i + 1, m.n_ions):
            dx = pos[3 * i] - pos[3 * j]
            dy = pos[3 * i + 1] - pos[3 * j + 1]
            dz = pos[3 * i + 2] - pos[3 * j + 2]
            r2 = dx * dx + dy * dy + dz * dz
            r3 = r2 * sqrt(r2)
            f = m.coulomb / r3
            acc[3 * i] += f * dx; acc[3 * i + 1] += f * dy; acc[3 * i + 2] += f * dz
            acc[3 * j] -= f * dx; acc[3 * j + 1] -= f * dy; acc[3 * j + 2] -= f * dz
    for i in range(3 * m.n_ions):
        acc[i] *= inv_m


cdef double c_energy(Model* m, double t, double* pos) nogil:
    cdef int i, j
    cdef double G[2]
    cdef double G1[2]
    cdef double st[4]
    cdef double u = 0.0, dx, dy, dz
    set_volts(m, t)
    for i in range(m.n_ions):
        rf_G(m, pos[3 * i], pos[3 * i + 1], G, G1)
        u += m.rf_coeff * (G[0] * G[0] + G[1] * G[1])
        if m.n_patch > 0:
            static_terms(m, pos[3 * i], pos[3 * i + 1], pos[3 * i + 2], st, True)
            u += m.charge * st[0]
    for i in range(m.n_ions):
        for j in range(i + 1, m.n_ions):
            dx = pos[3 * i] - pos[3 * j]
            dy = pos[3 * i + 1] - pos[3 * j + 1]
            dz = pos[3 * i + 2] - pos[3 * j + 2]
            u += m.coulomb / sqrt(dx * dx + dy * dy + dz * dz)
    return u


cdef Model make_model(double[:, ::1] rf, double rf_coeff, double[:, ::1] patches,
                      double[::1] v0, double[::1] v1, double[::1] volts, int kind,
                      double steep, double T, double charge, double mass, int n_ions,
                      double coulomb):
    cdef Model m
    m.rf = &rf[0, 0] if rf.shape[0] > 0 else NULL
    m.n_rf = rf.shape[0]
    m.rf_coeff = rf_coeff
    m.n_patch = patches.shape[0]
    m.patches = &patches[0, 0] if m.n_patch > 0 else NULL
    m.v0 = &v0[0] if m.n_patch > 0 else NULL
    m.v1 = &v1[0] if m.n_patch > 0 else NULL
    m.volts = &volts[0]
    m.kind = kind
    m.steep = steep
    m.T = T
    m.charge = charge
    m.mass = mass
    m.n_ions = n_ions
    m.coulomb = coulomb
    return m


def accel(double[:, ::1] rf, double rf_coeff, double[:, ::1] patches, double[::1] v0,
          double[::1] v1, int kind, double steep, double T, double charge, double mass,
          int n_ions, double coulomb, double t, double[:, ::1] pos):
    cdef double[::1] volts = np.zeros(max(patches.shape[0], 1))
    cdef Model m = make_model(rf, rf_coeff, patches, v0, v1, volts, kind, steep, T, charge,
                              mass, n_ions, coulomb)
    out = np.empty((n_ions, 3))
    cdef double[:, ::1] acc = out
    c_accel(&m, t, &pos[0, 0], &acc[0, 0])
    return out


def potential_energy(double[:, ::1] rf, double rf_coeff, double[:, ::1] patches,
                     double[::1] v0, double[::1] v1, int kind, double steep, double T,
                     double charge, double mass, int n_ions, double coulomb, double t,
                     double[:, ::1] pos):
    cdef double[::1] volts = np.zeros(max(patches.shape[0], 1))
    cdef Model m = make_model(rf, rf_coeff, patches, v0, v1, volts, kind, steep, T, charge,
                              mass, n_ions, coulomb)
    return c_energy(&m, t, &pos[0, 0])


cdef int check_state(Model* m, double* y, double y_max, double z_max, double min_dist) nogil:
    cdef int i, j
    cdef double dx, dy, dz
    for i in range(m.n_ions):
        if y[3 * i + 1] <= 0.0 or y[3 * i + 1] > y_max:
            return 1
    for i in range(m.n_ions):
        if fabs(y[3 * i + 2]) > z_max:
            return 2
    for i in range(m.n_ions):
        for j in range(i + 1, m.n_ions):
            dx = y[3 * i] - y[3 * j]
            dy = y[3 * i + 1] - y[3 * j + 1]
            dz = y[3 * i + 2] - y[3 * j + 2]
            if dx * dx + dy * dy + dz * dz < min_dist * min_dist:
                return 3
    return 0


cdef void rhs(Model* m, double t, double* y, double* out) nogil:
    cdef int n3 = 3 * m.n_ions
    cdef int i
    for i in range(n3):
        out[i] = y[n3 + i]
    c_accel(m, t, y, out + n3)


cdef void stage(Model* m, double t, double h, double* y, double[:, ::1] K, int s,
                double* y_stage, int dim) nogil:
    cdef int i, j
    cdef double acc
    for i in range(dim):
        acc = 0.0
        for j in range(s):
            if A8[s][j] != 0.0:
                acc += A8[s][j] * K[j, i]
        y_stage[i] = y[i] + h * acc
    rhs(m, t + C8[s] * h, y_stage, &K[s, 0])


def integrate(double[:, ::1] rf, double rf_coeff, double[:, ::1] patches, double[::1] v0,
              double[::1] v1, int kind, double steep, double T, double charge, double mass,
              int n_ions, double coulomb, double[::1] y0, double t0, double t1,
              double[::1] t_eval, double rtol, double atol_x, double atol_v, double h0,
              long max_steps, double y_max, double z_max, double min_dist):
    cdef int n3 = 3 * n_ions
    cdef int dim = 2 * n3
    cdef int n_eval = t_eval.shape[0]
    cdef double[::1] volts = np.zeros(max(patches.shape[0], 1))
    cdef Model m = make_model(rf, rf_coeff, patches, v0, v1, volts, kind, steep, T, charge,
                              mass, n_ions, coulomb)
    y_out_arr = np.full((n_eval, dim), np.nan)
    cdef double[:, ::1] y_out = y_out_arr
    cdef double[:, ::1] K = np.zeros((NX, dim))
    cdef double[:, ::1] F = np.zeros((7, dim))
    cdef double[::1] y = np.array(y0, dtype=float)
    cdef double[::1] y_new = np.zeros(dim)
    cdef double[::1] y_stage = np.zeros(dim)
    cdef double[::1] atol = np.zeros(dim)
    cdef double t = t0, h, span = t1 - t0, err, e3, e5, a3, a5, sc, factor, theta, acc, dy, val
    cdef long n_steps = 0, n_fev = 1
    cdef int i, j, s, k, i_out = 0, status = 0
    cdef bint rejected = False

    for i in range(dim):
        atol[i] = atol_x if i < n3 else atol_v
    with nogil:
        rhs(&m, t, &y[0], &K[0, 0])
        while i_out < n_eval and t_eval[i_out] <= t:
            for i in range(dim):
                y_out[i_out, i] = y[i]
            i_out += 1
        h = h0 if h0 > 0 else 1e-3 * span
        while t < t1:
            if n_steps >= max_steps:
                status = 4
                break
            h = fmin(h, t1 - t)
            if h < 1e-14 * fmax(fabs(t), span):
                status = 4
                break
            for s in range(1, NS):
                stage(&m, t, h, &y[0], K, s, &y_stage[0], dim)
            for i in range(dim):
                acc = 0.0
                for j in range(NS):
                    acc += B8[j] * K[j, i]
                y_new[i] = y[i] + h * acc
            rhs(&m, t + h, &y_new[0], &K[NS, 0])
            n_fev += NS
            e3 = 0.0
            e5 = 0.0
            for i in range(dim):
                a3 = 0.0
                a5 = 0.0
                for j in range(NS + 1):
                    a3 += E3_[j] * K[j, i]
                    a5 += E5_[j] * K[j, i]
                sc = atol[i] + rtol * fmax(fabs(y[i]), fabs(y_new[i]))
                e3 += (a3 / sc) * (a3 / sc)
                e5 += (a5 / sc) * (a5 / sc)
            if e5 == 0.0 and e3 == 0.0:
                err = 0.0
            else:
                err = h * e5 / sqrt((e5 + 0.01 * e3) * dim)
            if err <= 1.0:
                if i_out < n_eval and t_eval[i_out] <= t + h:
                    for s in range(NS + 1, NX):
                        stage(&m, t, h, &y[0], K, s, &y_stage[0], dim)
                    n_fev += NX - NS - 1
                    for i in range(dim):
                        dy = y_new[i] - y[i]
                        F[0, i] = dy
                        F[1, i] = h * K[0, i] - dy
                        F[2, i] = 2.0 * dy - h * (K[NS, i] + K[0, i])
                        for k in range(4):
                            acc = 0.0
                            for j in range(NX):
                                acc += D8[k][j] * K[j, i]
                            F[3 + k, i] = h * acc
                    while i_out < n_eval and t_eval[i_out] <= t + h:
                        theta = (t_eval[i_out] - t) / h
                        for i in range(dim):
                            val = 0.0
                            for k in range(7):
                                val += F[6 - k, i]
                                if k % 2 == 0:
                                    val *= theta
                                else:
                                    val *= 1.0 - theta
                            y_out[i_out, i] = y[i] + val
                        i_out += 1
                t = t + h
                for i in range(dim):
                    y[i] = y_new[i]
                    K[0, i] = K[NS, i]
                n_steps += 1
                status = check_state(&m, &y[0], y_max, z_max, min_dist)
                if status != 0:
                    break
                if err == 0.0:
                    factor = 10.0
                else:
                    factor = fmin(10.0, 0.9 * pow(err, -0.125))
                if rejected:
                    factor = fmin(1.0, factor)
                rejected = False
            else:
                factor = fmax(0.2, 0.9 * pow(err, -0.125))
                rejected = True
            h *= factor
    return y_out_arr, status, n_steps, n_fev, t
