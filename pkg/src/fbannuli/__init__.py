"""Free-boundary minimal annuli with spherical curvature lines in space forms.

The package integrates the Wente-type ODE cascade that produces a three
parameter family of minimal immersions in M^3(kappa), evaluates the period
and height maps on that family, and continues the branches of free-boundary
annuli out of the rotational catenoids.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .wente_ode import ParamTriple, derived_constants

__all__ = ["ParamTriple", "derived_constants", "__version__"]
