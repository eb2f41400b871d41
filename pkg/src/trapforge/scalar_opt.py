"""Derivative-free maximisation of a scalar function on an interval."""
from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo, hi, xtol_rel=1e-6, max_iter=200):
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= xtol_rel * max(abs(c), abs(d), 1e-300):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = c if fc >= fd else d
    return x, max(fc, fd)


def maximize(f, lo, hi, n_grid=512, log_grid=False, xtol_rel=1e-6):
    """Grid pre-scan followed by golden-section refinement of the best bracket.

    The grid value that is largest wins; exact ties go to the smaller abscissa.
    Returns ``(x_star, f_star, grid_x, grid_f)``.
    """
    if log_grid:
        xs = np.geomspace(lo, hi, n_grid)
    else:
        xs = np.linspace(lo, hi, n_grid)
    fs = np.array([f(x) for x in xs])
    i = int(np.argmax(fs))  # argmax returns the first (smallest x) on ties
    left = xs[max(i - 1, 0)]
    right = xs[min(i + 1, n_grid - 1)]
    x, fx = golden_section_max(f, left, right, xtol_rel=xtol_rel)
    if fs[i] > fx:
        x, fx = xs[i], fs[i]
    return float(x), float(fx), xs, fs
