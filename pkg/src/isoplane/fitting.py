"""Identification of (mu_iso, kappa_iso) from couple and dilatation fields.

Two discrete procedures are provided. The *norm fit* averages ``|u|`` over
a set of angles at each radius and fits ``A / r``. The *full-field fit* fits
both displacement components on a Cartesian grid against the isotropic
solution. In both cases ``mu_iso`` comes from the couple and is then used to
extract ``kappa_iso`` from the dilatation, since the isotropic dilatation
amplitude is ``1 / (4 pi (mu + kappa))``.

Any callable ``field(x1, x2) -> (2, n)`` can be fitted: an FEM
:class:`~isoplane.fem.DisplacementField` or an analytic solution.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .moduli import CubicModuli, norris_euclid, norris_log

DEFAULT_ANGLES_DEG = tuple(range(0, 50, 5))


class FitError(ArithmeticError):
    """A fit produced a nonpositive amplitude or modulus."""


@dataclass(frozen=True)
class RadialProfile:
    radii: np.ndarray
    unorm: np.ndarray
    angles_deg: tuple[float, ...] = DEFAULT_ANGLES_DEG

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or len(r) == 0 or np.any(np.diff(r) <= 0) or r[0] <= 0:
            raise ValueError("radii must be positive and strictly increasing")


@dataclass(frozen=True)
class GridSample:
    points: np.ndarray  # (n, 2)
    u: np.ndarray  # (n, 2)


@dataclass(frozen=True)
class FitReport:
    method: str
    mu_iso: float
    kappa_iso: float
    material: CubicModuli
    residuals: dict = field(default_factory=dict)

    @property
    def mu_log(self) -> float:
        return norris_log(self.material).mu

    @property
    def mu_euclid(self) -> float:
        return norris_euclid(self.material).mu

    @property
    def ratios(self) -> dict:
        return {
            "mu_iso/mu_log": self.mu_iso / self.mu_log,
            "mu_iso/mu_euclid": self.mu_iso / self.mu_euclid,
            "mu_iso/mu": self.mu_iso / self.material.mu,
            "kappa_iso/kappa": self.kappa_iso / self.material.kappa,
        }

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "mu_iso": self.mu_iso,
            "kappa_iso": self.kappa_iso,
            "ratios": self.ratios,
            "residuals": dict(self.residuals),
            "material": asdict(self.material),
        }


# -- sampling ----------------------------------------------------------------


def radial_radii(r_min: float, r_max: float, n: int = 2000, spacing: str = "linear") -> np.ndarray:
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    if spacing == "linear":
        return np.linspace(r_min, r_max, n)
    if spacing == "log":
        return np.geomspace(r_min, r_max, n)
    raise ValueError(f"unknown radial spacing {spacing!r}")


def radial_average(fld, radii, angles_deg=DEFAULT_ANGLES_DEG) -> RadialProfile:
    """Mean of ``|u(r cos a, r sin a)|`` over the angles, at each radius."""
    radii = np.asarray(radii, dtype=float)
    alpha = np.deg2rad(np.asarray(angles_deg, dtype=float))
    x1 = np.outer(radii, np.cos(alpha))
    x2 = np.outer(radii, np.sin(alpha))
    u = np.asarray(fld(x1.ravel(), x2.ravel()))
    norms = np.hypot(u[0], u[1]).reshape(x1.shape)
    return RadialProfile(radii, norms.mean(axis=1), tuple(angles_deg))


def cartesian_grid(r_min: float, r_max: float, spacing: float) -> np.ndarray:
    """Grid nodes ``spacing * (i, j)`` with ``r_min < r <= r_max``.

    The inner bound is strict (with a relative margin of 1e-9) so that no
    sample sits on the loaded hole boundary.
    """
    n = int(math.floor(r_max / spacing + 1e-9))
    g = spacing * np.arange(-n, n + 1)
    x1, x2 = np.meshgrid(g, g, indexing="ij")
    x1, x2 = x1.ravel(), x2.ravel()
    r = np.hypot(x1, x2)
    keep = (r > r_min * (1.0 + 1e-9)) & (r <= r_max * (1.0 + 1e-12))
    return np.column_stack([x1[keep], x2[keep]])


def grid_sample(fld, r_min: float, r_max: float, spacing: float) -> GridSample:
    pts = cartesian_grid(r_min, r_max, spacing)
    u = np.asarray(fld(pts[:, 0], pts[:, 1]))
    return GridSample(pts, u.T.copy())


# -- discrete fits -----------------------------------------------------------


def _inverse_r_amplitude(profile: RadialProfile) -> tuple[float, float]:
    """Least-squares ``A`` in ``unorm ~ A / r`` and the relative rms residual."""
    r = np.asarray(profile.radii, dtype=float)
    f = np.asarray(profile.unorm, dtype=float)
    amp = np.sum(f / r) / np.sum(1.0 / r**2)
    resid = np.sqrt(np.mean((f - amp / r) ** 2)) / np.sqrt(np.mean(f**2))
    return float(amp), float(resid)


def fit_mu_norm(profile: RadialProfile) -> float:
    """Shear modulus whose isotropic couple norm ``1 / (4 pi mu r)`` best fits the profile."""
    amp, _ = _inverse_r_amplitude(profile)
    if not amp > 0:
        raise FitError(f"nonpositive couple amplitude {amp!r}")
    return 1.0 / (4.0 * math.pi * amp)


def fit_kappa_norm(profile: RadialProfile, mu_iso: float) -> float:
    """Bulk modulus from a dilatation profile given ``mu_iso``."""
    if not mu_iso > 0:
        raise FitError("mu_iso must be positive")
    amp, _ = _inverse_r_amplitude(profile)
    if not amp > 0:
        raise FitError(f"nonpositive dilatation amplitude {amp!r}")
    kappa = 1.0 / (4.0 * math.pi * amp) - mu_iso
    if not kappa > 0:
        raise FitError(f"fitted kappa_iso={kappa!r} is not positive")
    return kappa


def _couple_shape(pts):
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    return np.column_stack([-pts[:, 1], pts[:, 0]]) / (4.0 * math.pi * r2[:, None])


def _dilatation_shape(pts):
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    return pts / (4.0 * math.pi * r2[:, None])


def _grid_amplitude(grid: GridSample, shape) -> tuple[float, float]:
    g = shape(np.asarray(grid.points, dtype=float))
    u = np.asarray(grid.u, dtype=float)
    if len(g) == 0:
        raise FitError("empty grid sample")
    amp = float(np.sum(u * g) / np.sum(g * g))
    resid = float(np.linalg.norm(u - amp * g) / np.linalg.norm(u))
    return amp, resid


def fit_mu_fullfield(grid: GridSample) -> float:
    """Least squares of both components against ``(-x2, x1) / (4 pi mu r^2)``."""
    amp, _ = _grid_amplitude(grid, _couple_shape)
    if not amp > 0:
        raise FitError(f"nonpositive couple amplitude {amp!r}")
    return 1.0 / amp


def fit_kappa_fullfield(grid: GridSample, mu_iso: float) -> float:
    """Least squares against ``x / (4 pi (mu + kappa) r^2)`` given ``mu_iso``."""
    if not mu_iso > 0:
        raise FitError("mu_iso must be positive")
    amp, _ = _grid_amplitude(grid, _dilatation_shape)
    if not amp > 0:
        raise FitError(f"nonpositive dilatation amplitude {amp!r}")
    kappa = 1.0 / amp - mu_iso
    if not kappa > 0:
        raise FitError(f"fitted kappa_iso={kappa!r} is not positive")
    return kappa


def norm_fit(couple: RadialProfile, dilatation: RadialProfile, material: CubicModuli) -> FitReport:
    mu = fit_mu_norm(couple)
    kappa = fit_kappa_norm(dilatation, mu)
    residuals = {
        "couple": _inverse_r_amplitude(couple)[1],
        "dilatation": _inverse_r_amplitude(dilatation)[1],
    }
    return FitReport("norm", mu, kappa, material, residuals)


def fullfield_fit(couple: GridSample, dilatation: GridSample, material: CubicModuli) -> FitReport:
    mu = fit_mu_fullfield(couple)
    kappa = fit_kappa_fullfield(dilatation, mu)
    residuals = {
        "couple": _grid_amplitude(couple, _couple_shape)[1],
        "dilatation": _grid_amplitude(dilatation, _dilatation_shape)[1],
    }
    return FitReport("fullfield", mu, kappa, material, residuals)


# -- continuous minimizers on the positive reals ------------------------------


def profile_interpolant(profile: RadialProfile):
    """Piecewise-linear ``fbar(r)`` through the profile samples."""
    r = np.asarray(profile.radii, dtype=float)
    f = np.asarray(profile.unorm, dtype=float)

    def fbar(x):
        return np.interp(x, r, f)

    fbar.breakpoints = r
    return fbar


def _quad(func, r_a, r_b, fbar, rtol=1e-10):
    pts = getattr(fbar, "breakpoints", None)
    if pts is not None:
        pts = np.asarray(pts)
        inner = pts[(pts > r_a) & (pts < r_b)]
        # integrate knot to knot; each piece is smooth
        edges = np.concatenate([[r_a], inner, [r_b]])
        return math.fsum(
            integrate.quad(func, lo, hi, epsabs=0.0, epsrel=rtol)[0] for lo, hi in zip(edges[:-1], edges[1:])
        )
    val, _ = integrate.quad(func, r_a, r_b, epsabs=0.0, epsrel=rtol, limit=500)
    return val


def _check_fbar(fbar, r_a, r_b):
    if not 0 < r_a < r_b:
        raise ValueError("need 0 < r_a < r_b")
    probe = np.array([float(fbar(r)) for r in np.linspace(r_a, r_b, 257)])
    if np.any(~np.isfinite(probe)) or np.any(probe <= 0):
        raise FitError("fbar must be positive on [r_a, r_b]")


def continuous_fit_log(fbar, r_a: float, r_b: float) -> float:
    """Minimizer of ``1/2 int log^2(fbar / f_mu) dr`` with ``f_mu = 1 / (4 pi mu r)``."""
    _check_fbar(fbar, r_a, r_b)
    integral = _quad(lambda r: math.log(float(fbar(r)) * r), r_a, r_b, fbar)
    return float(math.exp(-integral / (r_b - r_a)) / (4.0 * math.pi))


def continuous_fit_euclid(fbar, r_a: float, r_b: float) -> float:
    """Minimizer of ``1/2 int (fbar - f_mu)^2 dr``."""
    _check_fbar(fbar, r_a, r_b)
    integral = _quad(lambda r: float(fbar(r)) / r, r_a, r_b, fbar)
    return float((r_b - r_a) / (4.0 * math.pi * r_a * r_b * integral))


def log_objective(fbar, r_a: float, r_b: float, mu: float) -> float:
    c = math.log(4.0 * math.pi * mu)
    return 0.5 * _quad(lambda r: (math.log(float(fbar(r)) * r) + c) ** 2, r_a, r_b, fbar)


def euclid_objective(fbar, r_a: float, r_b: float, mu: float) -> float:
    k = 1.0 / (4.0 * math.pi * mu)
    return 0.5 * _quad(lambda r: (float(fbar(r)) - k / r) ** 2, r_a, r_b, fbar)
