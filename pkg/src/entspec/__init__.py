"""Entanglement spectrum of two scattering particles in a periodic box."""
__version__ = "0.1.0"

from .lattice import ConfigError, PacketSpec, SimConfig, derived_scales, validate_config  # noqa: E402
from .potential import PotentialSpec  # noqa: E402
from .blocks import NumericalError  # noqa: E402

__all__ = ["ConfigError", "NumericalError", "PacketSpec", "PotentialSpec", "SimConfig", "derived_scales",
           "validate_config", "__version__"]
