"""crgeo: numerical pseudo-Hermitian (CR) geometry on coordinate charts.

Builds the canonical connection of a pseudo-Hermitian structure (theta, J, h),
its torsion and curvature, geodesics / exponential maps / parallel transport,
and Cartan-style local isometries, with every construction verifiable as a
numerical residual.  All public entry points are pure functions of immutable
inputs; nothing in the package mutates shared state, so concurrent use from
multiple threads or processes is safe.
"""

__version__ = "0.1.0"

from .dual import AD, FD, DiffConfig

__all__ = ["AD", "FD", "DiffConfig", "__version__"]
