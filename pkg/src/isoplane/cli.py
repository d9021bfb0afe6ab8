"""Command-line front end.

Subcommands: ``norris``, ``analytic-eval``, ``fem-fit``, ``reproduce-table``.
Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import fem, fitting, greens, pipeline
from .config import GPA, KEYS, ConfigError, ScenarioConfig, apply_overrides, parse_config
from .moduli import ModuliError, norris_euclid, norris_log

log = logging.getLogger("isoplane")

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2


def _flag(attr: str) -> str:
    return "--" + attr.replace("_", "-")


def _add_config_args(p: argparse.ArgumentParser, keys=None) -> None:
    p.add_argument("--config", type=Path, help="key = value scenario file")
    for key, (attr, _) in KEYS.items():
        if keys is None or key in keys:
            p.add_argument(_flag(attr), dest=attr, metavar="VALUE", help=f"override {key}")


def load_config(args) -> ScenarioConfig:
    """Config file (if any) first, then command-line flags on top."""
    base = ScenarioConfig()
    if getattr(args, "config", None) is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        base = parse_config(text, base)
    changes = {}
    for key, (attr, parse) in KEYS.items():
        value = getattr(args, attr, None)
        if value is None:
            continue
        try:
            changes[attr] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {_flag(attr)}: {value!r}") from exc
    return apply_overrides(base, changes)


# -- norris --------------------------------------------------------------------


def norris_report(cfg: ScenarioConfig) -> dict:
    m = cfg.material()
    mu_e = norris_euclid(m).mu
    mu_l = norris_log(m).mu
    return {
        "kappa_iso_gpa": m.kappa / GPA,
        "mu_euclid_gpa": mu_e / GPA,
        "mu_log_gpa": mu_l / GPA,
        # parameters that regenerate the input from its projection
        "reverse_euclid": {"form": "(kappa, mu + 3c, mu - 2c)", "c_gpa": (m.mu - mu_e) / 3.0 / GPA},
        "reverse_log": {"form": "(kappa, mu * c**3, mu / c**2)", "c": (m.mu / m.mu_star) ** 0.2},
    }


def cmd_norris(args) -> int:
    rep = norris_report(load_config(args))
    if args.json:
        print(json.dumps(rep, indent=2, sort_keys=True))
    else:
        print(f"kappa_iso  = {rep['kappa_iso_gpa']:.6g} GPa")
        print(f"mu_euclid  = {rep['mu_euclid_gpa']:.6g} GPa")
        print(f"mu_log     = {rep['mu_log_gpa']:.6g} GPa")
        print(f"reverse euclid {rep['reverse_euclid']['form']} with c = {rep['reverse_euclid']['c_gpa']:.6g} GPa")
        print(f"reverse log    {rep['reverse_log']['form']} with c = {rep['reverse_log']['c']:.6g}")
    return EXIT_OK


# -- analytic-eval ---------------------------------------------------------------


def _read_points(path: Path) -> np.ndarray:
    try:
        pts = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except ValueError:
        pts = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
    except OSError as exc:
        raise ConfigError(f"cannot read points: {exc}") from exc
    if pts.shape[1] != 2:
        raise ConfigError("points file needs two columns x1,x2")
    return pts


def _grid_points(spec: list[str]) -> np.ndarray:
    try:
        half, n = float(spec[0]), int(spec[1])
    except ValueError as exc:
        raise ConfigError("--grid expects HALF_WIDTH N") from exc
    if not (half > 0 and n >= 2):
        raise ConfigError("--grid needs HALF_WIDTH > 0 and N >= 2")
    g = np.linspace(-half, half, n)
    x1, x2 = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([x1.ravel(), x2.ravel()])


def level_sets(m, kind, half: float, n: int, levels) -> list[tuple[float, int, np.ndarray]]:
    """Contours of ``r |u|`` normalised by its maximum on an ``n x n`` grid.

    ``r |u|`` is constant on circles in the isotropic case, so its level sets
    show the angular structure of the anisotropic field.
    """
    import contourpy

    g = np.linspace(-half, half, n)
    x1, x2 = np.meshgrid(g, g, indexing="ij")
    rec = greens.field_records(m, kind, np.column_stack([x1.ravel(), x2.ravel()]))
    z = (np.hypot(rec[:, 2], rec[:, 3]) * np.hypot(rec[:, 0], rec[:, 1])).reshape(x1.shape)
    z = z / np.nanmax(z)
    gen = contourpy.contour_generator(x1, x2, np.ma.masked_invalid(z))
    out = []
    for lev in levels:
        for i, line in enumerate(gen.lines(lev)):
            out.append((float(lev), i, line))
    return out


def cmd_analytic_eval(args) -> int:
    cfg = load_config(args)
    m = cfg.material()
    if args.points is not None:
        pts = _read_points(args.points)
    elif args.grid is not None:
        pts = _grid_points(args.grid)
    else:
        raise ConfigError("give --points FILE or --grid HALF_WIDTH N")
    rec = greens.field_records(m, args.kind, pts)
    singular = np.flatnonzero(np.isnan(rec[:, 2]))
    for i in singular:
        log.warning("row %d: singular point (%g, %g), displacement left as nan", i, rec[i, 0], rec[i, 1])
    if args.out is None:
        sys.stdout.write(pipeline.GRID_HEADER + "\n")
        np.savetxt(sys.stdout, rec, delimiter=",", fmt="%.12e")
    else:
        pipeline.write_csv(args.out, pipeline.GRID_HEADER, rec)
    if args.levels is not None:
        half = args.grid and float(args.grid[0]) or float(np.max(np.abs(pts)))
        levels = [float(v) for v in args.levels.split(",")]
        lines = level_sets(m, args.kind, half, args.level_grid, levels)

        def w(fh):
            fh.write("level,line,x1,x2\n")
            for lev, i, xy in lines:
                for x, y in xy:
                    fh.write(f"{lev!r},{i},{x:.12e},{y:.12e}\n")

        pipeline._atomic_write(Path(args.level_out), w)
    return EXIT_OK


# -- fem-fit -------------------------------------------------------------------


def cmd_fem_fit(args) -> int:
    cfg = load_config(args)
    out = Path(args.out_dir or cfg.output_dir)
    record = pipeline.run_scenario(cfg, keep_fields=args.export_mesh)
    written = pipeline.write_record(record, out, grids=not args.no_grid)
    if args.export_mesh:
        for kind, fld in record.fields.items():
            written.extend(pipeline.export_mesh_field(fld, out / f"{kind}_mesh"))
    for name in ("norm", "fullfield"):
        fit = record.fits[name]
        if "error" in fit:
            print(f"{name:<9} fit failed: {fit['error']}")
            continue
        r = fit["ratios"]
        print(
            f"{name:<9} mu_iso={fit['mu_iso'] / GPA:.5f} GPa  kappa_iso={fit['kappa_iso'] / GPA:.5f} GPa  "
            f"mu_iso/mu_log={r['mu_iso/mu_log']:.5f}  mu_iso/mu_euclid={r['mu_iso/mu_euclid']:.5f}  "
            f"kappa_iso/kappa={r['kappa_iso/kappa']:.5f}"
        )
    for p in written:
        log.info("wrote %s", p)
    return EXIT_OK


# -- reproduce-table -------------------------------------------------------------


def cmd_reproduce_table(args) -> int:
    base = load_config(args)
    checks = pipeline.reproduce_table(args.table, base, workers=args.workers)
    for c in checks:
        print(c.line())
    n_fail = sum(not c.passed for c in checks)
    print(f"{len(checks) - n_fail}/{len(checks)} within tolerance")
    if args.json is not None:
        pipeline.write_json(
            args.json,
            {"table": args.table, "rows": [{**c.__dict__, "passed": c.passed} for c in checks]},
        )
    return EXIT_OK if n_fail == 0 else EXIT_NUMERIC


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    # argparse usage errors exit with 2, the same code as config errors
    p = argparse.ArgumentParser(prog="isoplane", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    material_keys = {"material.kappa_gpa", "material.mu_gpa", "material.mu_star_gpa"}

    s = sub.add_parser("norris", help="closest isotropic moduli")
    _add_config_args(s, material_keys)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_norris)

    s = sub.add_parser("analytic-eval", help="closed-form couple / dilatation fields")
    _add_config_args(s, material_keys)
    s.add_argument("--kind", choices=[k.value for k in greens.Kind], default="couple")
    s.add_argument("--points", type=Path, help="CSV of x1,x2 rows")
    s.add_argument("--grid", nargs=2, metavar=("HALF_WIDTH", "N"), help="square N x N grid")
    s.add_argument("--out", type=Path, help="output CSV (default stdout)")
    s.add_argument("--levels", help="comma-separated levels of normalised r|u| to export")
    s.add_argument("--level-grid", type=int, default=401)
    s.add_argument("--level-out", default="levels.csv")
    s.set_defaults(func=cmd_analytic_eval)

    s = sub.add_parser("fem-fit", help="FEM couple and dilatation runs with both fits")
    _add_config_args(s)
    s.add_argument("--out-dir", help="alias for --output-dir")
    s.add_argument("--no-grid", action="store_true", help="skip the grid CSVs")
    s.add_argument("--export-mesh", action="store_true", help="write nodes/triangles/displacements")
    s.set_defaults(func=cmd_fem_fit)

    s = sub.add_parser("reproduce-table", help="rerun a published table and compare")
    s.add_argument("table", type=int, choices=(1, 2, 3))
    _add_config_args(s, {"mesh.h_m", "fit.n_radii", "fit.radial_spacing", "fit.grid_spacing_m", "load.mode"})
    s.add_argument("--workers", type=int, help=f"parallel rows (default ${pipeline.WORKERS_ENV} or 1)")
    s.add_argument("--json", type=Path, help="write the comparison as JSON")
    s.set_defaults(func=cmd_reproduce_table)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ModuliError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (fem.SolverError, fem.LoadError, fem.MeshError, fitting.FitError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
