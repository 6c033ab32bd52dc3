"""
conewave experiment runner.

Each subcommand reads an optional line-oriented config, applies command
line overrides, runs one computation and writes a CSV, a JSON summary
and config-echo.json into the output directory.

Exit codes: 0 success, 1 runtime or config error, 2 pass flag false.
"""

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from conewave.calculus import ConeField, mode_radial_values, propagate, sobolev_norm, to_grid
from conewave.config import (
    SUBCOMMANDS,
    ExperimentConfig,
    build_cross_section,
    env_threads,
    validate_config,
)
from conewave.cross_section import CrossSectionKind, hormander_ratio
from conewave.errors import ConeWaveError, DomainError
from conewave.estimates import (
    dispersive_decay_scan,
    expected_decay_slope,
    g_function_sweep,
    gaussian_test_field,
    hardy_quotient,
    local_smoothing_quotient,
    preset_field,
    resolvent_sup_scan,
    sigma_grid,
    strichartz_quotient,
    sup_norm,
    uniform_sobolev_probe,
)
from conewave.geometry import ConeGeometry, build_geometry
from conewave.nls import nls_evolve, scale_to_h1, scattering_passes, scattering_profile
from conewave.reports import ReportWriter, Row
from conewave.specfun import bessel_i, bessel_j, bessel_k, bessel_y, wronskian_jy

logger = logging.getLogger(__name__)

Outcome = Tuple[List[Row], Dict[str, Any]]

EXPERIMENT_KEYS = ("seed", "output_dir", "workers")
GEOMETRY_KEYS = ("n", "cross_section", "dipole_a", "spectrum_file", "lmax")
DISCRETIZATION_KEYS = ("r_max", "nodes", "rho_cutoff", "conjugate_time")
CONTROL_KEYS = ("config", "log_level", "subcommand")


# ---------------------------------------------------------------- helpers


def _workers(config: ExperimentConfig) -> int:
    cap = env_threads()
    return min(config.experiment.workers, cap) if cap else config.experiment.workers


def _geometry(config: ExperimentConfig, base_dir: Optional[Path]) -> ConeGeometry:
    model = build_cross_section(config.geometry, base_dir)
    disc = config.discretization
    geometry = build_geometry(model, disc.r_max, disc.nodes, disc.conjugate_time, _workers(config))
    if disc.rho_cutoff is not None and geometry.shared_plan.rho_max < disc.rho_cutoff:
        raise DomainError(
            f"rho_max={geometry.shared_plan.rho_max:.4g} below rho_cutoff={disc.rho_cutoff:g}; raise nodes or lower r_max"
        )
    return geometry


def _params(config: ExperimentConfig) -> Dict[str, Any]:
    return config.parameters.model_dump(mode="json")


# ---------------------------------------------------------------- runners


def run_modes(config: ExperimentConfig, base_dir: Optional[Path]) -> Outcome:
    model = build_cross_section(config.geometry, base_dir)
    table = model.spectrum_table().head(config.parameters.max_groups)
    rows = [
        {"group": int(i), "nu": float(row.nu), "lambda": float(row["lambda"]), "degeneracy": int(row.degeneracy)}
        for i, row in table.iterrows()
    ]
    summary = {
        "estimate": "modes",
        "params": _params(config),
        "description": model.description,
        "nu0": model.nu0,
        "nu1": model.nu1,
        "n_modes": model.n_modes,
        "groups": len(model.groups),
    }
    if model.supports_evaluation:
        summary["hormander_ratio"] = hormander_ratio(model)
    return rows, summary


def run_specfun_table(config: ExperimentConfig, base_dir: Optional[Path]) -> Outcome:
    params = config.parameters
    rows = []
    for nu in params.orders:
        for x in params.arguments:
            rows.append(
                {
                    "nu": nu,
                    "x": x,
                    "J": float(bessel_j(nu, x)),
                    "Y": float(bessel_y(nu, x)),
                    "I": float(bessel_i(nu, x)),
                    "K": float(bessel_k(nu, x)),
                    "wronskian_residual": float(wronskian_jy(nu, x)),
                }
            )
    worst = max(row["wronskian_residual"] for row in rows) if rows else 0.0
    return rows, {"estimate": "specfun-table", "params": _params(config), "max_wronskian_residual": worst}


def _slice_rows(t: float, field: ConeField) -> List[Row]:
    """u(t) at every shared radial node; y-index is the Y quadrature node, or the mode index in mode space."""
    geometry = field.geometry
    values = to_grid(field) if geometry.supports_evaluation else mode_radial_values(field).T
    rows = []
    for k, r in enumerate(geometry.shared_radii):
        for y, u in enumerate(values[k]):
            rows.append({"t": t, "r": float(r), "y-index": y, "Re u": float(u.real), "Im u": float(u.imag)})
    return rows


def run_propagate(config: ExperimentConfig, base_dir: Optional[Path]) -> Outcome:
    params = config.parameters
    geometry = _geometry(config, base_dir)
    initial = preset_field(geometry, params.preset, params.width, params.mode)
    gaussian3 = (
        params.preset == "gaussian"
        and geometry.cross_section.kind is CrossSectionKind.FLAT_SPHERE
        and geometry.n == 3
    )
    mass0 = initial.norm()
    rows: List[Row] = []
    norms: Dict[str, List[Optional[float]]] = {"l2_norm": [], "h1_norm": [], "sup_norm": [], "oracle_sup": []}
    drift = 0.0
    for t in params.times:
        field = propagate(initial, t)
        l2 = field.norm()
        drift = max(drift, abs(l2 - mass0) / mass0)
        tau = 2.0 * t / params.width ** 2
        norms["l2_norm"].append(l2)
        norms["h1_norm"].append(sobolev_norm(field, 1.0))
        norms["sup_norm"].append(sup_norm(field))
        norms["oracle_sup"].append((1.0 + tau * tau) ** -0.75 if gaussian3 else None)
        rows.extend(_slice_rows(t, field))
    summary = {
        "estimate": "propagate",
        "params": _params(config),
        "y_axis": "quadrature" if geometry.supports_evaluation else "mode",
        "times": list(params.times),
        "l2_drift": drift,
    }
    summary.update(norms)
    return rows, summary


def run_dispersive_scan(config: ExperimentConfig, base_dir: Optional[Path]) -> Outcome:
    params = config.parameters
    geometry = _geometry(config, base_dir)
    times = np.geomspace(params.t_min, params.t_max, params.samples)
    fit = dispersive_decay_scan(geometry, times, params.width)
    rows = [
        {"t": t, "sup_norm": s, "fitted": math.exp(fit.intercept) * t ** fit.slope}
        for t, s in zip(fit.times, fit.sup_norms)
    ]
    summary = {
        "estimate": "dispersive-scan",
        "params": _params(config),
        "slope": fit.slope,
        "expected_slope": expected_decay_slope(geometry.n, geometry.cross_section.nu0),
        "residual": fit.residual,
        "nu0": geometry.cross_section.nu0,
    }
    return rows, summary


def run_strichartz(config: ExperimentConfig, base_dir: Optional[Path]) -> Outcome:
    p = config.parameters
    report = strichartz_quotient(
        _geometry(config, base_dir), p.q, p.r, p.horizon, p.ensemble, config.experiment.seed, p.time_samples
    )
    return report.rows(), report.summary()


def run_local_smoothing(config: ExperimentConfig, base_dir: Optional[Path]) -> Outcome:
    p = config.parameters
    report = local_smoothing_quotient(
        _geometry(config, base_dir),
        p.alpha,
        p.s,
        p.beta,
        weight=p.weight,
        horizon=p.horizon,
        ensemble=p.ensemble,
        seed=config.experiment.seed,
        time_samples=p.time_samples,
        epsilon=p.epsilon,
    )
    return report.rows(), report.summary()


def run_g_check(config: ExperimentConfig, base_dir: Optional[Path]) -> Outcome:
    p = config.parameters
    samples = g_function_sweep(p.orders, p.radii, p.scales, n=config.geometry.n)
    rows = [
        {
            "nu": s.nu,
            "R": s.radius,
            "M": s.frequency_scale,
            "G": s.g_value,
            "bound": s.bound_value,
            "ratio": s.ratio,
            "branch": s.branch,
            "witness": s.witness,
        }
        for s in samples
    ]
    summary = {
        "estimate": "g-check",
        "params": _params(config),
        "sup": max(s.ratio for s in samples),
        "sup_small": max((s.ratio for s in samples if s.branch == "small"), default=0.0),
        "sup_large": max((s.ratio for s in samples if s.branch == "large"), default=0.0),
        "pass": all(s.holds for s in samples),
        "note": "ratios are checked against frozen witnesses; no constants are known",
    }
    return rows, summary


def run_hardy(config: ExperimentConfig, base_dir: Optional[Path]) -> Outcome:
    p = config.parameters
    report = hardy_quotient(_geometry(config, base_dir), p.s, p.p, p.ensemble, config.experiment.seed)
    return report.rows(), report.summary()


def run_resolvent(config: ExperimentConfig, base_dir: Optional[Path]) -> Outcome:
    p = config.parameters
    sigmas = sigma_grid(p.sigma_radii, p.sigma_angles)
    report = resolvent_sup_scan(_geometry(config, base_dir), sigmas, p.max_groups)
    rows = [
        {"member": i, "sigma_re": s.real, "sigma_im": s.imag, "quotient": a, "quotient_doubled": b}
        for i, (s, a, b) in enumerate(zip(sigmas, report.quotients, report.quotients_doubled))
    ]
    return rows, report.summary()


def run_sobolev(config: ExperimentConfig, base_dir: Optional[Path]) -> Outcome:
    p = config.parameters
    geometry = _geometry(config, base_dir)
    sigmas = sigma_grid(p.sigma_radii, p.sigma_angles)
    fields = [gaussian_test_field(geometry, w) for w in p.widths]
    scan = uniform_sobolev_probe(geometry, sigmas, fields)
    rows = [
        {"sigma_re": s.real, "sigma_im": s.imag, "width": w, "quotient": q}
        for s, row in zip(scan.sigmas, scan.quotients)
        for w, q in zip(p.widths, row)
    ]
    return rows, {"estimate": "sobolev", "params": _params(config), "sup": scan.sup}


def _trajectory(config: ExperimentConfig, base_dir: Optional[Path]):
    p = config.parameters
    geometry = _geometry(config, base_dir)
    initial = scale_to_h1(gaussian_test_field(geometry, p.width), p.h1_norm)
    times = np.linspace(0.0, p.T, p.snapshots)
    return nls_evolve(initial, p.T, p.dt, p.gamma, snapshots=times)


def _scattering_rows(trajectory) -> List[Row]:
    return [{"t": s.t, "v_H1": s.v_h1, "increment": s.increment} for s in scattering_profile(trajectory)]


def run_nls(config: ExperimentConfig, base_dir: Optional[Path], writer: Optional[ReportWriter] = None) -> Outcome:
    trajectory = _trajectory(config, base_dir)
    rows = [
        {"t": s.t, "mass": s.conserved.mass, "energy": s.conserved.energy, "H1": s.h1_norm, "Linf": s.sup_norm}
        for s in trajectory
    ]
    if writer is not None:
        writer.write_csv("scatter", _scattering_rows(trajectory), name="scattering.csv")
    first, last = trajectory[0].conserved, trajectory[-1].conserved
    summary = {
        "estimate": "nls",
        "params": _params(config),
        "mass_drift": abs(last.mass - first.mass) / first.mass,
        "energy_drift": abs(last.energy - first.energy) / abs(first.energy),
    }
    return rows, summary


def run_scatter(config: ExperimentConfig, base_dir: Optional[Path]) -> Outcome:
    trajectory = _trajectory(config, base_dir)
    rows = _scattering_rows(trajectory)
    profile = scattering_profile(trajectory)
    summary = {
        "estimate": "scatter",
        "params": _params(config),
        "last_increment": profile[-1].increment,
        "pass": scattering_passes(profile, config.parameters.tolerance),
        "note": "small-data diagnostic; pass means the last Cauchy increment is below tolerance",
    }
    return rows, summary


RUNNERS: Dict[str, Callable[..., Outcome]] = {
    "modes": run_modes,
    "specfun-table": run_specfun_table,
    "propagate": run_propagate,
    "dispersive-scan": run_dispersive_scan,
    "strichartz": run_strichartz,
    "local-smoothing": run_local_smoothing,
    "g-check": run_g_check,
    "hardy": run_hardy,
    "resolvent": run_resolvent,
    "sobolev": run_sobolev,
    "nls": run_nls,
    "scatter": run_scatter,
}


def run_experiment(config: ExperimentConfig, base_dir: Optional[Path] = None) -> int:
    """Run one configured experiment; returns the exit code."""
    subcommand = config.subcommand
    writer = ReportWriter(config.experiment.output_dir)
    writer.write_echo(config.echo())
    try:
        if subcommand == "nls":
            rows, summary = run_nls(config, base_dir, writer)
        else:
            rows, summary = RUNNERS[subcommand](config, base_dir)
    except Exception as exc:
        level = logging.ERROR if isinstance(exc, ConeWaveError) else logging.CRITICAL
        logger.log(level, "%s failed: %s", subcommand, exc, exc_info=not isinstance(exc, ConeWaveError))
        writer.write_summary({"error": type(exc).__name__, "message": str(exc)})
        return 1
    writer.write_csv(subcommand, rows)
    writer.write_summary(summary)
    return 2 if summary.get("pass") is False else 0


# ---------------------------------------------------------------- argument parsing


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="line-oriented config file")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--n", type=int)
    common.add_argument("--cross-section", dest="cross_section", choices=["flat-sphere", "dipole", "custom"])
    common.add_argument("--dipole-a", dest="dipole_a", type=float)
    common.add_argument("--spectrum-file", dest="spectrum_file")
    common.add_argument("--lmax", type=int)
    common.add_argument("--r-max", dest="r_max", type=float)
    common.add_argument("--nodes", type=int)
    common.add_argument("--rho-cutoff", dest="rho_cutoff", type=float)
    common.add_argument("--conjugate-time", dest="conjugate_time", action="store_const", const=True)
    return common


def _nls_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--gamma", type=float, choices=[1.0, -1.0])
    sub.add_argument("--h1-norm", dest="h1_norm", type=float)
    sub.add_argument("--T", dest="T", type=float)
    sub.add_argument("--dt", type=float)
    sub.add_argument("--snapshots", type=int)
    sub.add_argument("--width", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conewave", description="Spectral NLS solver and estimate checks on metric cones")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    common = _common_parser()
    subs = {name: subparsers.add_parser(name, parents=[common], argument_default=argparse.SUPPRESS) for name in SUBCOMMANDS}

    subs["modes"].add_argument("--max-groups", dest="max_groups", type=int)
    subs["specfun-table"].add_argument("--orders", nargs="+", type=float)
    subs["specfun-table"].add_argument("--arguments", nargs="+", type=float)
    subs["propagate"].add_argument("--times", nargs="+", type=float)
    subs["propagate"].add_argument("--width", type=float)
    subs["propagate"].add_argument("--preset", choices=["gaussian", "bump", "single-mode"])
    subs["propagate"].add_argument("--mode", type=int)
    subs["dispersive-scan"].add_argument("--t-min", dest="t_min", type=float)
    subs["dispersive-scan"].add_argument("--t-max", dest="t_max", type=float)
    subs["dispersive-scan"].add_argument("--samples", type=int)
    subs["dispersive-scan"].add_argument("--width", type=float)
    for name in ("strichartz", "local-smoothing"):
        subs[name].add_argument("--horizon", "--T", dest="horizon", type=float)
        subs[name].add_argument("--ensemble", type=int)
        subs[name].add_argument("--time-samples", dest="time_samples", type=int)
    subs["strichartz"].add_argument("--q", type=float)
    subs["strichartz"].add_argument("--r", type=float)
    ls = subs["local-smoothing"]
    ls.add_argument("--alpha", type=float)
    ls.add_argument("--s", type=float)
    ls.add_argument("--beta", type=float)
    ls.add_argument("--weight", choices=["power", "compact"])
    ls.add_argument("--epsilon", type=float)
    subs["g-check"].add_argument("--orders", nargs="+", type=float)
    subs["g-check"].add_argument("--radii", nargs="+", type=float)
    subs["g-check"].add_argument("--scales", nargs="+", type=float)
    subs["hardy"].add_argument("--s", type=float)
    subs["hardy"].add_argument("--p", type=float)
    subs["hardy"].add_argument("--ensemble", type=int)
    for name in ("resolvent", "sobolev"):
        subs[name].add_argument("--sigma-radii", dest="sigma_radii", nargs="+", type=float)
        subs[name].add_argument("--sigma-angles", dest="sigma_angles", type=int)
    subs["resolvent"].add_argument("--max-groups", dest="max_groups", type=int)
    subs["sobolev"].add_argument("--widths", nargs="+", type=float)
    _nls_flags(subs["nls"])
    _nls_flags(subs["scatter"])
    subs["scatter"].add_argument("--tolerance", type=float)
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    """Group parsed flags by config section."""
    values = vars(args)
    overrides: Dict[str, Dict[str, Any]] = {"experiment": {"subcommand": args.subcommand}}
    for key, value in values.items():
        if key in CONTROL_KEYS:
            continue
        if key in EXPERIMENT_KEYS:
            section = "experiment"
        elif key in GEOMETRY_KEYS:
            section = "geometry"
        elif key in DISCRETIZATION_KEYS:
            section = "discretization"
        else:
            section = args.subcommand
        overrides.setdefault(section, {})[key] = value
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = getattr(args, "log_level", None) or os.getenv("CONEWAVE_LOG_LEVEL", "INFO")
    logging.basicConfig(level=level.upper(), format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")

    config_path = getattr(args, "config", None)
    base_dir = Path(config_path).parent if config_path else None
    try:
        text = Path(config_path).read_text(encoding="utf-8") if config_path else ""
        config = validate_config(text, overrides_from_args(args), base_dir)
    except (ConeWaveError, OSError) as exc:
        print(f"❌ {type(exc).__name__}: {exc}")
        return 1

    code = run_experiment(config, base_dir)
    output = Path(config.experiment.output_dir)
    if code == 0:
        print(f"✅ {config.subcommand} finished, results in {output}")
    elif code == 2:
        print(f"⚠️ {config.subcommand} finished but the pass flag is false, see {output / 'summary.json'}")
    else:
        print(f"❌ {config.subcommand} failed, see {output / 'summary.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
