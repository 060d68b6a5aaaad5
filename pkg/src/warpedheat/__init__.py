"""Heat kernels, scattering and spectral asymptotics on warped products with cusps."""
from . import assembly, cross_spectrum, diffpoly, geometry, oracle, specfun, spectral1d
from .errors import WarpedHeatError

__version__ = "0.1.0"

__all__ = ["assembly", "cross_spectrum", "diffpoly", "geometry", "oracle", "specfun", "spectral1d",
           "WarpedHeatError", "__version__"]
