"""hetcap: capacity planning and stability simulation for HetNet downlinks.

A single macro cell overlaid with disjoint pico cells serves file downloads.
Blank subframes time-share the channel between the macro BS and the (parallel)
pico BSs, and rate-ratio thresholds decide which station serves each location.
This package computes the maximum supportable arrival rate by solving the
associated continuous linear program on a Monte-Carlo discretization, solves
the finite-user minimum clearing-time problem, and verifies stability or
instability of the induced schedulers by discrete-event simulation.
"""

from hetcap.errors import CertificateError, ConfigError, GeometryError

__version__ = "0.1.0"

__all__ = ["ConfigError", "GeometryError", "CertificateError", "__version__"]
