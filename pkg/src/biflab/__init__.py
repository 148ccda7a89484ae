"""biflab: activity measures of marked points in families of rational maps,
with Lyapunov-exponent and dimension statistics sampled from them."""

__version__ = "0.1.0"

from .core import ProjectivePoint, RationalMap                      # noqa: F401
from .families import (Family, OrbitRecord, unicritical, lattes4,   # noqa: F401
                       marked_orbit, param_derivative_transfer)
