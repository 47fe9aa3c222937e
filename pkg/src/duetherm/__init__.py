"""Two-oscillator quantum heat engine with bath-mediated correlations."""

__version__ = "0.1.0"

from .model import EngineParams, ParamError, Topology, load_config, validate_params
from .thermo import DriveSpectrum, average_power, heat_currents, power_monochromatic, report

__all__ = [
    "DriveSpectrum",
    "EngineParams",
    "ParamError",
    "Topology",
    "average_power",
    "heat_currents",
    "load_config",
    "power_monochromatic",
    "report",
    "validate_params",
]
