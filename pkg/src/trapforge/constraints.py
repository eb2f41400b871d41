"""Engineering budget of a trap chip: stability proxy, power and breakdown."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from . import electrostatics as es
from .constants import E_CHARGE


@dataclass(frozen=True)
class ChipBudget:
    """Chip limits.  ``cap`` is the rf load capacitance (F), ``resistance`` in ohm."""

    cap: float = 20e-12
    resistance: float = 0.5
    v_breakdown: float = 500.0
    p_max: float = 3.0
    q_max: float = 0.7

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise ValueError(f"budget field {k} must be positive")


def stability_q(drive: es.RfDrive, ion: es.IonSpecies, h):
    """Stability proxy ``q = 2 Q V_rf / (m Omega^2 h^2)``."""
    if h <= 0:
        raise ValueError("h must be positive")
    return 2 * ion.charge * drive.v_rf / (ion.mass * drive.omega_rf**2 * h**2)


def depth_from_q(v_rf, kappa, q, charge=E_CHARGE):
    """Trap depth (eV) from rf amplitude, geometric factor and stability proxy."""
    if min(v_rf, kappa) <= 0 or q < 0:
        raise ValueError("v_rf and kappa must be positive and q non-negative")
    return (charge / E_CHARGE) * v_rf * kappa * q / (2 * math.pi**2)


def power_dissipation(v_rf, omega_rf, budget: ChipBudget):
    """Dissipated rf power ``0.5 V^2 Omega^2 C^2 R`` in watts."""
    if v_rf <= 0 or omega_rf <= 0:
        raise ValueError("v_rf and omega_rf must be positive")
    return 0.5 * v_rf**2 * omega_rf**2 * budget.cap**2 * budget.resistance


def _electrode_potentials(layout, voltages):
    vmap = voltages.as_dict() if hasattr(voltages, "as_dict") else dict(voltages)
    out = {}
    for e in layout.electrodes:
        if e.role == "rf":
            out[e.name] = ("rf", 0.0)
        elif e.role in ("endcap", "wedge", "control"):
            out[e.name] = ("dc", float(vmap.get(e.role, 0.0)))
        else:
            out[e.name] = ("dc", 0.0)
    return out


def max_adjacent_difference(layout, drive, voltages):
    """Largest worst-case voltage difference across any shared electrode edge.

    An rf electrode swings through ``+-V_rf``; against a static neighbour at
    ``V`` the worst case is ``V_rf + |V|``.
    """
    pots = _electrode_potentials(layout, voltages)
    worst, pair = 0.0, None
    for p, q in layout.adjacent_pairs():
        kp, vp = pots[p]
        kq, vq = pots[q]
        if kp == "rf" and kq == "rf":
            diff = 0.0
        elif kp == "rf" or kq == "rf":
            diff = drive.v_rf + abs(vq if kp == "rf" else vp)
        else:
            diff = abs(vp - vq)
        if diff > worst:
            worst, pair = diff, [p, q]
    return worst, pair


def check_budget(layout, drive, voltages, budget: ChipBudget, ion=None):
    """Report every budget constraint with its value, limit, margin and verdict.

    ``voltages`` may be a single voltage set or a sequence of them (e.g. the
    start and end of a waveform); the worst case is reported.
    """
    ion = ion or es.IonSpecies.yb171()
    h = layout.node_analytic()[1]
    sets = voltages if isinstance(voltages, (list, tuple)) else [voltages]
    worst, pair = 0.0, None
    for v in sets:
        d, p = max_adjacent_difference(layout, drive, v)
        if d >= worst:
            worst, pair = d, p
    q = stability_q(drive, ion, h)
    pd = power_dissipation(drive.v_rf, drive.omega_rf, budget)

    def entry(value, limit, **extra):
        return {"value": value, "limit": limit, "margin": limit - value,
                "pass": bool(value <= limit), **extra}

    report = {
        "stability_proxy_q": entry(q, budget.q_max),
        "power_W": entry(pd, budget.p_max),
        "max_adjacent_difference_V": entry(worst, budget.v_breakdown, pair=pair),
    }
    report["all_pass"] = all(v["pass"] for v in report.values())
    return report
