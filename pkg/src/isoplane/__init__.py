"""Best-fit isotropic moduli for planar anisotropic elasticity.

Closed-form plane-strain fundamental solutions for cubic materials, a
linear-triangle finite-element solver for a clamped square with a loaded
circular hole, and least-squares identification of (mu_iso, kappa_iso).
"""

from .moduli import (
    CubicModuli,
    IsotropicModuli,
    dist_euclid_cubic,
    dist_log_cubic,
    norris_euclid,
    norris_log,
    reverse_family_euclid,
    reverse_family_log,
    to_voigt,
)

__all__ = [
    "CubicModuli",
    "IsotropicModuli",
    "dist_euclid_cubic",
    "dist_log_cubic",
    "norris_euclid",
    "norris_log",
    "reverse_family_euclid",
    "reverse_family_log",
    "to_voigt",
]

__version__ = "0.1.0"
