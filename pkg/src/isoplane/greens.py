"""Plane-strain fundamental solutions for cubic materials.

Point forces, the concentrated couple and the center of dilatation in an
infinite cubic medium. Root-dependent formulas are evaluated in complex
arithmetic; when the two characteristic roots form a conjugate pair the
imaginary parts cancel and the real part is returned.

Conventions
-----------
* ``lam = kappa - mu`` is the Lame parameter, ``mu_star`` the second shear
  modulus; the plane-strain stress law is
  ``s11 = (lam+2mu) e11 + lam e22``, ``s22 = lam e11 + (lam+2mu) e22``,
  ``s12 = 2 mu_star e12``.
* The couple has unit moment (counter-clockwise), the dilatation is the
  limit of two orthogonal force dipoles with forces at ``+-d/4`` divided by
  ``d``.
* Fields are vectorized over ``x1``, ``x2`` and returned as arrays of shape
  ``(2, *x1.shape)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .moduli import CubicModuli, IsotropicModuli

#: relative |mu_star - mu| below which isotropic closed forms are used
ISOTROPIC_TOL = 1e-8


class DegenerateIsotropic(ArithmeticError):
    """The characteristic roots coalesce (mu_star == mu); use isotropic forms."""


class SingularPoint(ValueError):
    """Evaluation requested at the source point."""


class Kind(enum.Enum):
    FORCE1 = "force1"
    FORCE2 = "force2"
    COUPLE = "couple"
    DILATATION = "dilatation"


@dataclass(frozen=True)
class CharacteristicRoots:
    s1: complex
    s2: complex
    p: float
    q: float
    sqrt_q: complex


def is_degenerate(m: CubicModuli, tol: float = ISOTROPIC_TOL) -> bool:
    return abs(m.mu_star - m.mu) < tol * m.mu


def char_roots(m: CubicModuli, tol: float = ISOTROPIC_TOL) -> CharacteristicRoots:
    """Roots ``s1, s2`` of the characteristic quartic, with ``Re(s_m) > 0``.

    Raises :class:`DegenerateIsotropic` when ``|mu_star - mu| < tol * mu``.
    """
    if is_degenerate(m, tol):
        raise DegenerateIsotropic(f"mu_star={m.mu_star!r} is isotropic to within {tol}")
    lam, mu, ms = m.lam, m.mu, m.mu_star
    p = 2.0 * lam * ms - 4.0 * mu * (lam + mu)
    q = 16.0 * mu * (mu - ms) * (lam + mu) * (lam + mu + ms)
    sqrt_q = complex(np.sqrt(complex(q)))
    norm = math.sqrt(2.0 * ms * (lam + 2.0 * mu))
    # principal sqrt has Re >= 0; Re > 0 holds for admissible moduli
    s1 = complex(np.sqrt(-p - sqrt_q)) / norm
    s2 = complex(np.sqrt(-p + sqrt_q)) / norm
    # p**2 - q = norm**4, so s1 * s2 = 1; the smaller root loses digits to
    # cancellation and is taken as the reciprocal of the larger one
    if abs(s1) < abs(s2):
        s1 = 1.0 / s2
    else:
        s2 = 1.0 / s1
    return CharacteristicRoots(s1, s2, p, q, sqrt_q)


def acoustic_forms(m: CubicModuli, xi1, xi2):
    """Cofactors ``C11, C12, C22`` of the acoustic tensor and its determinant ``D``."""
    lam, mu, ms = m.lam, m.mu, m.mu_star
    c11 = ms * xi1**2 + (lam + 2 * mu) * xi2**2
    c12 = -(lam + ms) * xi1 * xi2
    c22 = (lam + 2 * mu) * xi1**2 + ms * xi2**2
    return c11, c12, c22, c11 * c22 - c12**2


def _y_coeffs(m: CubicModuli, s: complex) -> tuple[complex, complex]:
    a = m.lam + 2.0 * m.mu
    return (a * s**2 - m.mu_star) / s, (m.mu_star * s**2 - a) / s


def _as_points(x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    x1, x2 = np.broadcast_arrays(x1, x2)
    if np.any((x1 == 0.0) & (x2 == 0.0)):
        raise SingularPoint("field evaluated at the origin")
    return x1, x2


# -- rational fields --------------------------------------------------------


@dataclass(frozen=True)
class _Term:
    coef: complex
    a: int  # power of x1
    b: int  # power of x2
    i: int  # power of 1 / (x1**2 + s1**2 x2**2)
    j: int  # power of 1 / (x1**2 + s2**2 x2**2)


@dataclass(frozen=True)
class RationalField:
    """Displacement field ``u_k = Re sum c x1^a x2^b R1^-i R2^-j``.

    ``R_m = x1**2 + s_m**2 x2**2``. Closed under differentiation, which gives
    exact gradients for tractions and equilibrium checks.
    """

    s1: complex
    s2: complex
    components: tuple[tuple[_Term, ...], tuple[_Term, ...]]
    complex_valued: bool = field(default=True)

    def __call__(self, x1, x2) -> np.ndarray:
        return np.real(self.raw(x1, x2))

    def raw(self, x1, x2) -> np.ndarray:
        """Complex sum before taking the real part (for leakage checks)."""
        x1, x2 = _as_points(x1, x2)
        return np.stack([self._eval(terms, x1, x2) for terms in self.components])

    def _eval(self, terms, x1, x2):
        dtype = complex if self.complex_valued else float
        s1 = self.s1 if self.complex_valued else self.s1.real
        s2 = self.s2 if self.complex_valued else self.s2.real
        r1 = x1**2 + s1**2 * x2**2
        r2 = x1**2 + s2**2 * x2**2
        out = np.zeros(x1.shape, dtype=dtype)
        for t in terms:
            c = t.coef if self.complex_valued else t.coef.real
            out = out + c * x1**t.a * x2**t.b / (r1**t.i * r2**t.j)
        return out

    def _diff_terms(self, terms, axis):
        s1sq, s2sq = self.s1**2, self.s2**2
        out: dict[tuple[int, int, int, int], complex] = {}

        def add(c, a, b, i, j):
            if c != 0:
                key = (a, b, i, j)
                out[key] = out.get(key, 0) + c

        for t in terms:
            c, a, b, i, j = t.coef, t.a, t.b, t.i, t.j
            if axis == 0:
                if a:
                    add(c * a, a - 1, b, i, j)
                add(-2 * i * c, a + 1, b, i + 1, j)
                add(-2 * j * c, a + 1, b, i, j + 1)
            else:
                if b:
                    add(c * b, a, b - 1, i, j)
                add(-2 * i * s1sq * c, a, b + 1, i + 1, j)
                add(-2 * j * s2sq * c, a, b + 1, i, j + 1)
        return tuple(_Term(c, *k) for k, c in sorted(out.items()))

    def diff(self, axis: int) -> "RationalField":
        """Partial derivative with respect to ``x1`` (axis 0) or ``x2`` (axis 1)."""
        comps = tuple(self._diff_terms(terms, axis) for terms in self.components)
        return RationalField(self.s1, self.s2, comps, self.complex_valued)

    def gradient(self, x1, x2) -> np.ndarray:
        """``G[k, l] = d u_k / d x_l`` with shape ``(2, 2, *x1.shape)``."""
        return np.stack([self.diff(0)(x1, x2), self.diff(1)(x1, x2)], axis=1)


def _field(s1, s2, comp1, comp2, complex_valued=True) -> RationalField:
    mk = lambda terms: tuple(_Term(complex(c), *k) for c, *k in terms)  # noqa: E731
    return RationalField(complex(s1), complex(s2), (mk(comp1), mk(comp2)), complex_valued)


def couple_field(m: CubicModuli, tol: float = ISOTROPIC_TOL) -> RationalField:
    """Concentrated couple of unit moment as a :class:`RationalField`."""
    if is_degenerate(m, tol):
        k = 1.0 / (4.0 * math.pi * m.mu)
        return _field(1, 1, [(-k, 0, 1, 1, 0)], [(k, 1, 0, 1, 0)], complex_valued=False)
    r = char_roots(m, tol)
    y11, y12 = _y_coeffs(m, r.s1)
    y21, y22 = _y_coeffs(m, r.s2)
    lm = m.lam + m.mu_star
    k = 1.0 / (4.0 * math.pi * r.sqrt_q)
    k0 = 1.0 / (4.0 * math.pi * m.mu_star * (m.lam + 2.0 * m.mu))
    u1 = [
        (-k * (lm * r.s1 - (y11 - y21) * r.s1**2), 0, 1, 1, 0),
        (k * lm * r.s2, 0, 1, 0, 1),
        (-k0 * y21, 2, 1, 1, 1),
    ]
    u2 = [
        (k * (lm * r.s2 + y22), 1, 0, 0, 1),
        (-k * (lm * r.s1 + y12), 1, 0, 1, 0),
    ]
    return _field(r.s1, r.s2, u1, u2)


def dilatation_field(m: CubicModuli, tol: float = ISOTROPIC_TOL) -> RationalField:
    """Center of dilatation of unit strength as a :class:`RationalField`."""
    if is_degenerate(m, tol):
        k = 1.0 / (4.0 * math.pi * (m.lam + 2.0 * m.mu))
        return _field(1, 1, [(k, 1, 0, 1, 0)], [(k, 0, 1, 1, 0)], complex_valued=False)
    r = char_roots(m, tol)
    y11, y12 = _y_coeffs(m, r.s1)
    y21, y22 = _y_coeffs(m, r.s2)
    lm = m.lam + m.mu_star
    k = 1.0 / (4.0 * math.pi * r.sqrt_q)
    k0 = 1.0 / (4.0 * math.pi * m.mu_star * (m.lam + 2.0 * m.mu))
    u1 = [
        (k * (lm * r.s1 - y11), 1, 0, 1, 0),
        (-k * (lm * r.s2 - y21), 1, 0, 0, 1),
    ]
    u2 = [
        (k * lm * r.s2, 0, 1, 0, 1),
        (-k * (lm * r.s1 + (y12 - y22) * r.s1**2), 0, 1, 1, 0),
        (k0 * y22, 2, 1, 1, 1),
    ]
    return _field(r.s1, r.s2, u1, u2)


def analytic_field(m: CubicModuli, kind: Kind | str) -> RationalField:
    kind = Kind(kind)
    if kind is Kind.COUPLE:
        return couple_field(m)
    if kind is Kind.DILATATION:
        return dilatation_field(m)
    raise ValueError(f"no rational closed form for {kind.value}")


# -- public evaluators -------------------------------------------------------


def point_force_displacement(m: CubicModuli, direction: int, x1, x2) -> np.ndarray:
    """Displacement due to a unit point force along ``x_direction`` at the origin.

    The angle ``theta_m`` is continued analytically as
    ``(log(x1 + i s x2) - log(x1 - i s x2)) / 2i``, which reduces to
    ``atan2(s x2, x1)`` for real ``s``; the difference ``theta_2 - theta_1``
    is continuous across the negative ``x1`` axis.
    """
    if direction not in (1, 2):
        raise ValueError("direction must be 1 or 2")
    r = char_roots(m)
    x1, x2 = _as_points(x1, x2)
    y11, y12 = _y_coeffs(m, r.s1)
    y21, y22 = _y_coeffs(m, r.s2)
    k = 1.0 / (2.0 * math.pi * r.sqrt_q)

    def log_r(s):
        return 0.5 * np.log(x1**2 + s**2 * x2**2 + 0j)

    def theta(s):
        return (np.log(x1 + 1j * s * x2) - np.log(x1 - 1j * s * x2)) / 2j

    cross = k * (m.lam + m.mu_star) * (theta(r.s2) - theta(r.s1))
    if direction == 1:
        u = (k * (y11 * log_r(r.s1) - y21 * log_r(r.s2)), cross)
    else:
        u = (cross, k * (y12 * log_r(r.s1) - y22 * log_r(r.s2)))
    return np.real(np.stack(u))


def couple_cubic(m: CubicModuli, x1, x2) -> np.ndarray:
    return couple_field(m)(x1, x2)


def dilatation_cubic(m: CubicModuli, x1, x2) -> np.ndarray:
    return dilatation_field(m)(x1, x2)


def couple_iso(mu: float, x1, x2) -> np.ndarray:
    """Isotropic concentrated couple ``(-x2, x1) / (4 pi mu r^2)``."""
    x1, x2 = _as_points(x1, x2)
    k = 1.0 / (4.0 * math.pi * mu * (x1**2 + x2**2))
    return np.stack([-x2 * k, x1 * k])


def dilatation_iso(iso: IsotropicModuli, x1, x2) -> np.ndarray:
    """Isotropic center of dilatation ``x / (4 pi (mu + kappa) r^2)``."""
    x1, x2 = _as_points(x1, x2)
    k = 1.0 / (4.0 * math.pi * (iso.mu + iso.kappa) * (x1**2 + x2**2))
    return np.stack([x1 * k, x2 * k])


def couple_finite_dipole(m: CubicModuli, d: float, x1, x2) -> np.ndarray:
    """Four-force approximation of the couple (forces at distance ``d/4``)."""
    if not d > 0:
        raise ValueError("dipole arm must be positive")
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    h = d / 4.0
    f = point_force_displacement
    return (
        f(m, 1, x1, x2 + h)
        - f(m, 1, x1, x2 - h)
        - f(m, 2, x1 + h, x2)
        + f(m, 2, x1 - h, x2)
    )


def dilatation_finite_dipole(m: CubicModuli, d: float, x1, x2) -> np.ndarray:
    """Four-force approximation of the center of dilatation."""
    if not d > 0:
        raise ValueError("dipole arm must be positive")
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    h = d / 4.0
    f = point_force_displacement
    return (
        f(m, 1, x1 - h, x2)
        - f(m, 1, x1 + h, x2)
        + f(m, 2, x1, x2 - h)
        - f(m, 2, x1, x2 + h)
    )


def stress_from_gradient(m: CubicModuli, grad: np.ndarray) -> np.ndarray:
    """Plane-strain cubic stress ``(s11, s22, s12)`` from ``grad[k, l] = du_k/dx_l``."""
    e11, e22 = grad[0, 0], grad[1, 1]
    g12 = grad[0, 1] + grad[1, 0]
    a = m.lam + 2.0 * m.mu
    return np.stack([a * e11 + m.lam * e22, m.lam * e11 + a * e22, m.mu_star * g12])


def traction_on_circle(m: CubicModuli, kind: Kind | str, a: float, theta) -> np.ndarray:
    """Traction exerted on the material outside the circle ``r = a``.

    Equals ``sigma . n`` with ``n = -(cos theta, sin theta)``, the outward normal
    of the perforated body. For the couple its resultant moment is +1.
    """
    if not a > 0:
        raise ValueError("radius must be positive")
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    u = analytic_field(m, kind)
    sig = stress_from_gradient(m, u.gradient(a * c, a * s))
    n1, n2 = -c, -s
    return np.stack([sig[0] * n1 + sig[2] * n2, sig[2] * n1 + sig[1] * n2])


def field_records(m: CubicModuli, kind: Kind | str, points) -> np.ndarray:
    """Rows ``(x1, x2, u1, u2)``; rows at the source point carry NaN displacement."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.full((len(pts), 4), np.nan)
    out[:, :2] = pts
    ok = ~((pts[:, 0] == 0) & (pts[:, 1] == 0))
    kind = Kind(kind)
    if kind in (Kind.FORCE1, Kind.FORCE2):
        u = point_force_displacement(m, 1 if kind is Kind.FORCE1 else 2, pts[ok, 0], pts[ok, 1])
    else:
        u = analytic_field(m, kind)(pts[ok, 0], pts[ok, 1])
    out[ok, 2:] = u.T
    return out
