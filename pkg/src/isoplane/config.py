"""Scenario configuration as flat ``key = value`` text.

Moduli are given in GPa and converted to Pa when building the material.
Lines starting with ``#`` and blank lines are ignored.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .fem import LoadMode
from .fitting import DEFAULT_ANGLES_DEG
from .moduli import CubicModuli

GPA = 1e9


class ConfigError(ValueError):
    pass


# (config key, attribute, parser)
_KEYS = [
    ("material.kappa_gpa", "kappa_gpa", float),
    ("material.mu_gpa", "mu_gpa", float),
    ("material.mu_star_gpa", "mu_star_gpa", float),
    ("domain.side_m", "side_m", float),
    ("domain.hole_diameter_m", "hole_diameter_m", float),
    ("mesh.h_m", "h_m", float),
    ("fit.radius_m", "fit_radius_m", float),
    ("fit.n_radii", "n_radii", int),
    ("fit.radial_spacing", "radial_spacing", str),
    ("fit.grid_spacing_m", "grid_spacing_m", float),
    ("fit.angles_deg", "angles_deg", lambda s: tuple(float(a) for a in s.split(","))),
    ("load.mode", "load_mode", str),
    ("output.dir", "output_dir", str),
]
KEYS = {k: (attr, parse) for k, attr, parse in _KEYS}


@dataclass(frozen=True)
class ScenarioConfig:
    kappa_gpa: float = 7.645
    mu_gpa: float = 5.901
    mu_star_gpa: float = 0.626
    side_m: float = 1.0
    hole_diameter_m: float = 0.01
    h_m: float = 0.000125
    fit_radius_m: float = 0.25
    n_radii: int = 2000
    radial_spacing: str = "linear"
    grid_spacing_m: float = 0.001
    angles_deg: tuple[float, ...] = tuple(float(a) for a in DEFAULT_ANGLES_DEG)
    load_mode: str = LoadMode.UNIFORM.value
    output_dir: str = "out"

    def __post_init__(self):
        self.validate()

    @property
    def hole_radius_m(self) -> float:
        return 0.5 * self.hole_diameter_m

    def material(self) -> CubicModuli:
        return CubicModuli(self.kappa_gpa * GPA, self.mu_gpa * GPA, self.mu_star_gpa * GPA)

    def validate(self) -> None:
        try:
            self.material()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        a = self.hole_radius_m
        if not (0 < 2 * a < self.side_m):
            raise ConfigError("need 0 < hole diameter < domain side")
        if not 0 < self.h_m < a:
            raise ConfigError("mesh.h_m must lie in (0, hole radius)")
        if not a < self.fit_radius_m <= 0.5 * self.side_m:
            raise ConfigError("fit.radius_m must lie in (hole radius, side / 2]")
        if self.n_radii < 2:
            raise ConfigError("fit.n_radii must be at least 2")
        if self.radial_spacing not in ("linear", "log"):
            raise ConfigError("fit.radial_spacing must be 'linear' or 'log'")
        if not 0 < self.grid_spacing_m < self.fit_radius_m:
            raise ConfigError("fit.grid_spacing_m must lie in (0, fit radius)")
        if not self.angles_deg:
            raise ConfigError("fit.angles_deg must not be empty")
        try:
            LoadMode(self.load_mode)
        except ValueError as exc:
            raise ConfigError(f"load.mode must be one of {[m.value for m in LoadMode]}") from exc

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {k: getattr(self, attr) for k, (attr, _) in KEYS.items()}


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse ``key = value`` lines on top of ``base`` (defaults if omitted)."""
    changes = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not value:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, parse = KEYS[key]
        try:
            changes[attr] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return apply_overrides(base or ScenarioConfig(), changes)


def apply_overrides(base: ScenarioConfig, changes: dict) -> ScenarioConfig:
    try:
        return base.replace(**changes)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def serialize_config(cfg: ScenarioConfig) -> str:
    return "".join(f"{k} = {_format(getattr(cfg, attr))}\n" for k, (attr, _) in KEYS.items())
