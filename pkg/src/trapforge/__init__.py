"""Surface-electrode ion-trap geometry optimisation and two-ion separation dynamics."""
from ._core import BACKEND
from .axial import QuarticFit, VoltageSet
from .constraints import ChipBudget
from .electrostatics import FieldSample, IonSpecies, RectPatch, RfDrive, StripElectrode
from .geometry import FiveWireParams, NodeInfo, TrapLayout
from .shuttling import IonState, RampProfile, SeparationRun, Waveform

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ChipBudget", "FieldSample", "FiveWireParams", "IonSpecies", "IonState",
    "NodeInfo", "QuarticFit", "RampProfile", "RectPatch", "RfDrive", "SeparationRun",
    "StripElectrode", "TrapLayout", "VoltageSet", "Waveform",
]
