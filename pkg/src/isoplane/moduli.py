"""Isotropic and cubic moduli in plane strain.

Moduli are stored as (kappa, mu, mu_star) where kappa is the planar bulk
modulus, so that the Lame parameter is ``lam = kappa - mu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: relative positivity margin applied to every modulus
POSITIVITY_EPS = 1e-12


class ModuliError(ValueError):
    """Raised for inadmissible moduli or family parameters."""


def _check_positive(eps: float, **values: float) -> None:
    scale = max(abs(v) for v in values.values())
    for name, v in values.items():
        if not math.isfinite(v) or v <= eps * scale:
            raise ModuliError(f"{name} must be positive, got {v!r}")


@dataclass(frozen=True)
class CubicModuli:
    """Planar cubic material; isotropic when ``mu_star == mu``."""

    kappa: float
    mu: float
    mu_star: float

    def __post_init__(self):
        _check_positive(POSITIVITY_EPS, kappa=self.kappa, mu=self.mu, mu_star=self.mu_star)

    @property
    def lam(self) -> float:
        return self.kappa - self.mu

    @property
    def is_isotropic(self) -> bool:
        return self.mu_star == self.mu

    def inverse(self) -> "CubicModuli":
        """Reciprocal of every modulus (the moduli of the compliance)."""
        return CubicModuli(1.0 / self.kappa, 1.0 / self.mu, 1.0 / self.mu_star)

    def scaled(self, s: float) -> "CubicModuli":
        return CubicModuli(s * self.kappa, s * self.mu, s * self.mu_star)

    @classmethod
    def from_lame(cls, lam: float, mu: float, mu_star: float) -> "CubicModuli":
        return cls(lam + mu, mu, mu_star)


@dataclass(frozen=True)
class IsotropicModuli:
    kappa: float
    mu: float

    def __post_init__(self):
        _check_positive(POSITIVITY_EPS, kappa=self.kappa, mu=self.mu)

    @property
    def lam(self) -> float:
        return self.kappa - self.mu

    def as_cubic(self) -> CubicModuli:
        return CubicModuli(self.kappa, self.mu, self.mu)


def to_voigt(m: CubicModuli | IsotropicModuli) -> np.ndarray:
    """6x6 Voigt stiffness of a cubic (or isotropic) material.

    The normal block has eigenvalues ``3 kappa - mu`` and ``2 mu`` (twice), so
    the matrix is positive definite only when ``3 kappa > mu`` in addition to
    the plane-strain conditions enforced by :class:`CubicModuli`.
    """
    if isinstance(m, IsotropicModuli):
        m = m.as_cubic()
    c = np.zeros((6, 6))
    c[:3, :3] = m.kappa - m.mu
    c[np.arange(3), np.arange(3)] = m.kappa + m.mu
    c[np.arange(3, 6), np.arange(3, 6)] = m.mu_star
    return c


def _cubic(m: CubicModuli | IsotropicModuli) -> CubicModuli:
    return m.as_cubic() if isinstance(m, IsotropicModuli) else m


def dist_euclid_cubic(a, b) -> float:
    """Euclidean (Frobenius) distance between two cubic Voigt matrices."""
    a, b = _cubic(a), _cubic(b)
    return math.sqrt(
        9.0 * (a.kappa - b.kappa) ** 2
        + 8.0 * (a.mu - b.mu) ** 2
        + 12.0 * (a.mu_star - b.mu_star) ** 2
    )


def dist_log_cubic(a, b) -> float:
    """Logarithmic distance ``|log A - log B|`` between two cubic Voigt matrices."""
    a, b = _cubic(a), _cubic(b)
    return math.sqrt(
        math.log(a.kappa / b.kappa) ** 2
        + 2.0 * math.log(a.mu / b.mu) ** 2
        + 3.0 * math.log(a.mu_star / b.mu_star) ** 2
    )


def norris_euclid(m: CubicModuli) -> IsotropicModuli:
    """Closest isotropic tensor in the Euclidean distance: ``0.4 mu + 0.6 mu_star``."""
    # written as an increment so that mu_star == mu returns mu bit-for-bit
    return IsotropicModuli(m.kappa, m.mu + 0.6 * (m.mu_star - m.mu))


def norris_log(m: CubicModuli) -> IsotropicModuli:
    """Closest isotropic tensor in the logarithmic distance.

    The shear modulus is the weighted geometric mean ``(mu**2 mu_star**3)**(1/5)``,
    evaluated in log space to avoid overflow for moduli given in Pa.
    """
    if m.mu == m.mu_star:
        return IsotropicModuli(m.kappa, m.mu)
    mu_iso = math.exp(0.4 * math.log(m.mu) + 0.6 * math.log(m.mu_star))
    return IsotropicModuli(m.kappa, mu_iso)


def reverse_family_euclid(iso: IsotropicModuli, c: float) -> CubicModuli:
    """Cubic material ``(kappa, mu + 3c, mu - 2c)`` sharing ``iso`` as Euclidean fit."""
    mu, mu_star = iso.mu + 3.0 * c, iso.mu - 2.0 * c
    if mu <= 0 or mu_star <= 0:
        raise ModuliError(f"c={c!r} leaves the admissible range for mu_iso={iso.mu!r}")
    return CubicModuli(iso.kappa, mu, mu_star)


def reverse_family_log(iso: IsotropicModuli, c: float) -> CubicModuli:
    """Cubic material ``(kappa, mu c**3, mu / c**2)`` sharing ``iso`` as log fit."""
    if not c > 0:
        raise ModuliError(f"c must be positive, got {c!r}")
    return CubicModuli(iso.kappa, iso.mu * c**3, iso.mu / c**2)
