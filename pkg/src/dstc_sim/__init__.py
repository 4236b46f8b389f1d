"""Link-level simulator for two-layer amplify-and-forward relay networks.

Five relay protocols (EJHS, RMC, MJHS, RSC, RMCKC) with exact ML decoding,
closed-form receive SNR, optimum power allocation by simplex grid search,
and reproducible Monte-Carlo BER measurement.
"""

__version__ = "0.1.0"

from .numerics import SeededStream
from .protocols import PowerAllocation, Protocol

__all__ = ["PowerAllocation", "Protocol", "SeededStream", "__version__"]
