"""JSON run configuration with defaults, validation and unit conversion.

Interface units: lengths in micrometres, voltages in volts, the rf drive as
a cyclic frequency in MHz (``Omega_rf = 2 pi f``), durations in microseconds,
capacitance in pF.  Everything is converted to SI when objects are built.
"""
from __future__ import annotations

import copy
import json
import math

from . import axial as ax
from . import constraints as cons
from . import electrostatics as es
from . import geometry as geo
from . import shuttling as sh
from .constants import AMU, E_CHARGE, MHZ, UM, YB171_MASS_AMU
from .errors import ConfigError

DEFAULTS = {
    "seed": 0,
    "trap": {
        "a_um": 60.0, "b_um": 300.0, "c_um": 150.0, "gap_um": 0.0, "ratio_mode": "custom",
        "design": "outer_segmented", "E_um": 220.0, "W_um": 220.0, "C_um": 220.0,
        "n_segments": 9, "d_um": None,
    },
    "drive": {"v_rf": 450.0, "rf_frequency_MHz": 55.0},
    "ion": {"mass_amu": YB171_MASS_AMU, "charge_e": 1.0},
    "separation": {
        "start": {"endcap": 30.0, "wedge": -34.0, "control": 0.0},
        "end": {"endcap": 30.0, "wedge": 50.0, "control": -48.0},
        "profile": "tanh",
        "steepness": [4.0],
        "durations_us": [1000.0, 2000.0, 4000.0, 8000.0],
        "n_ions": 2,
        "initial_temperature_K": 0.0,
        "depth_samples": 21,
    },
    "heating": {"coefficient": sh.HEATING_COEFFICIENT, "uncertainty": sh.HEATING_UNCERTAINTY,
                "omega_is_angular": True, "h_um": None},
    "budget": {"cap_pF": 20.0, "resistance_ohm": 0.5, "v_breakdown": 500.0, "p_max_W": 3.0,
               "q_max": 0.7},
    "output": {"directory": "trapforge_out", "emit_trajectory": True},
    "tolerances": {"rtol": 1e-9, "atol_m": 1e-12, "samples_per_period": 40},
    "optimize": {"ratio_modes": ["equal", "half"], "designs": list(geo.DESIGNS),
                 "a_um": 60.0, "ratio_mode": "equal", "n_grid": 200},
    "sweep": {"parameter": "a_um", "values": [30.0, 40.0, 50.0, 60.0, 70.0, 100.0, 200.0, 300.0],
              "scale_widths": True},
}

SWEEP_PARAMETERS = ("a_um", "b_um", "c_um", "E_um", "W_um", "C_um", "v_rf", "rf_frequency_MHz")


def _merge(defaults, user, path=""):
    out = copy.deepcopy(defaults)
    for k, v in user.items():
        where = f"{path}{k}"
        if k not in defaults:
            raise ConfigError(f"unknown configuration key '{where}'")
        if isinstance(defaults[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"'{where}' must be an object")
            out[k] = _merge(defaults[k], v, where + ".")
        else:
            out[k] = v
    return out


def load(path=None, text=None):
    """Read a config file (or JSON text) and merge it onto the defaults."""
    if path is None and text is None:
        return RunConfig(copy.deepcopy(DEFAULTS))
    try:
        raw = json.loads(text) if text is not None else json.load(open(path))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    return RunConfig(_merge(DEFAULTS, raw))


class RunConfig:
    """Validated configuration; ``data`` holds the effective JSON document."""

    def __init__(self, data):
        self.data = data
        try:
            self._validate()
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def _validate(self):
        d = self.data
        self.five_wire()
        self.layout()
        self.drive()
        self.ion()
        self.budget()
        sep = d["separation"]
        self.start_voltages()
        self.end_voltages()
        if sep["profile"] not in sh.PROFILE_KINDS:
            raise ConfigError(f"separation.profile must be one of {sh.PROFILE_KINDS}")
        if not sep["steepness"] or any(float(n) <= 0 for n in sep["steepness"]):
            raise ConfigError("separation.steepness must be a non-empty list of positive numbers")
        if any(float(T) <= 0 for T in sep["durations_us"]):
            raise ConfigError("separation.durations_us must be positive")
        if int(sep["n_ions"]) not in (1, 2):
            raise ConfigError("separation.n_ions must be 1 or 2")
        if float(sep["initial_temperature_K"]) < 0:
            raise ConfigError("separation.initial_temperature_K must be non-negative")
        tol = d["tolerances"]
        if not (tol["rtol"] > 0 and tol["atol_m"] > 0 and int(tol["samples_per_period"]) >= 2):
            raise ConfigError("tolerances must be positive")
        heat = d["heating"]
        if heat["coefficient"] <= 0 or heat["uncertainty"] < 0:
            raise ConfigError("heating coefficient must be positive")
        if heat["h_um"] is not None and heat["h_um"] <= 0:
            raise ConfigError("heating.h_um must be positive")
        for m in d["optimize"]["ratio_modes"]:
            if m not in ("equal", "half"):
                raise ConfigError("optimize.ratio_modes entries must be 'equal' or 'half'")
        for g in d["optimize"]["designs"]:
            if g not in geo.DESIGNS:
                raise ConfigError(f"optimize.designs entries must be in {geo.DESIGNS}")
        if d["optimize"]["ratio_mode"] not in ("equal", "half"):
            raise ConfigError("optimize.ratio_mode must be 'equal' or 'half'")
        if d["sweep"]["parameter"] not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep.parameter must be one of {SWEEP_PARAMETERS}")
        if not isinstance(d["seed"], int):
            raise ConfigError("seed must be an integer")

    # builders ----------------------------------------------------------------
    def five_wire(self, trap=None):
        t = trap or self.data["trap"]
        return geo.FiveWireParams(a=t["a_um"] * UM, b=t["b_um"] * UM, c=t["c_um"] * UM,
                                  gap=t["gap_um"] * UM, ratio_mode=t["ratio_mode"])

    def layout(self, trap=None):
        t = trap or self.data["trap"]
        d = None if t["d_um"] is None else t["d_um"] * UM
        return geo.TrapLayout(self.five_wire(t), t["design"], E=t["E_um"] * UM,
                              W=t["W_um"] * UM, C_w=t["C_um"] * UM,
                              n_segments=int(t["n_segments"]), d=d)

    def drive(self, drive=None):
        r = drive or self.data["drive"]
        return es.RfDrive(float(r["v_rf"]), 2 * math.pi * float(r["rf_frequency_MHz"]) * MHZ)

    def ion(self):
        i = self.data["ion"]
        return es.IonSpecies(mass=float(i["mass_amu"]) * AMU, charge=float(i["charge_e"]) * E_CHARGE)

    def budget(self):
        b = self.data["budget"]
        return cons.ChipBudget(cap=b["cap_pF"] * 1e-12, resistance=b["resistance_ohm"],
                               v_breakdown=b["v_breakdown"], p_max=b["p_max_W"], q_max=b["q_max"])

    def start_voltages(self):
        return ax.VoltageSet.from_dict(self.data["separation"]["start"])

    def end_voltages(self):
        return ax.VoltageSet.from_dict(self.data["separation"]["end"])

    def tolerances(self):
        t = self.data["tolerances"]
        return sh.Tolerances(rtol=t["rtol"], atol=t["atol_m"],
                             samples_per_period=int(t["samples_per_period"]))

    def heating(self):
        h = self.data["heating"]
        return sh.HeatingModel(coefficient=h["coefficient"], uncertainty=h["uncertainty"],
                               angular=bool(h["omega_is_angular"]), h_um=h["h_um"])

    def durations(self):
        return [float(T) * 1e-6 for T in self.data["separation"]["durations_us"]]

    def to_json(self):
        return json.dumps(self.data, indent=2, sort_keys=True)
