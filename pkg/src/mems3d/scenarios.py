"""Scenario runners behind the ``simulate`` command.

Every runner returns a :class:`Report`; :func:`write_outputs` turns it into
CSV tables, VTK files, a text report and a manifest. CSV content depends
only on the configuration, never on timing or worker count: parallel work
items are independent solves whose results are collected in input order.
"""

import csv
import json
import logging
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__
from .config import config_to_dict
from .errors import ConfigError, DegenerateFitError, SolverError
from .fem.assembly import Loads
from .fem.solver import newton_solve
from .lamination import (
    argmax_curvature,
    fit_circle,
    format_cell,
    stack_curvature,
    sweep_rows,
    tip_deflection,
)
from .materials import misfit_strain, reference_bilayer
from .mesh import LayeredMeshSpec, generate_layered_mesh
from .models import (
    build_cantilever_model,
    deformed_centerline,
    electrode_potential,
    joule_power,
    peak_temperature,
    tip_height,
)

log = logging.getLogger(__name__)

# tip deflection below this fraction of the reference bilayer's counts as flat
FLATNESS_THRESHOLD = 0.25


@dataclass
class Report:
    """Scenario results: scalar summary, CSV tables and fields to export."""

    kind: str
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)  # file name -> (header, rows)
    fields: list = field(default_factory=list)  # (file name, model, state)
    failures: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.failures

    def text(self):
        lines = [f"scenario: {self.kind}"]
        for key, value in self.summary.items():
            lines.append(f"  {key}: {_pretty(value)}")
        for message in self.failures:
            lines.append(f"  FAILED: {message}")
        return "\n".join(lines) + "\n"


def _pretty(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _pool_map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def build_model(config):
    """Mesh and coupled model described by ``config``."""
    spec = LayeredMeshSpec(
        config.stack,
        config.mesh.divisions_x,
        config.mesh.divisions_y,
        config.divisions_per_layer(),
        heater_region=config.mesh.heater_region,
        piezo_region=config.mesh.piezo_region,
        heater_material=config.material(config.mesh.heater_material),
        piezo_material=config.material(config.mesh.piezo_material),
    )
    mesh = generate_layered_mesh(spec)
    return build_cantilever_model(
        mesh, config.stack, config.physics,
        finite_strain=config.solver.finite_strain, pressure=config.kind == "sense",
    )


def _oracle_summary(stack, delta_t=0.0):
    res = stack_curvature(stack, delta_t)
    return res, {
        "curvature_oracle_per_m": res.curvature,
        "radius_oracle_m": res.radius,
        "tip_deflection_oracle_m": tip_deflection(res.curvature, stack.length),
        "midplane_strain": res.midplane_strain,
        "neutral_axis_m": res.neutral_axis,
    }


def run_oracle(config, workers=1):
    """Closed-form curvature and per-layer stresses of the configured stack."""
    stack = config.stack
    res, summary = _oracle_summary(stack, config.delta_T_operating)
    report = Report("oracle", summary)
    rows = []
    for i, (layer, (s_bot, s_top)) in enumerate(zip(stack.layers, res.per_layer_axial_stress)):
        rows.append([i, layer.material.name, layer.thickness, misfit_strain(layer, stack), s_bot, s_top])
    report.tables["layers.csv"] = (
        ("layer", "material", "thickness_m", "misfit_strain", "stress_bottom_Pa", "stress_top_Pa"), rows
    )
    return report


def _sweep_point(args):
    stack, changes, delta_t = args
    for index, thickness in changes:
        stack = stack.with_thickness(index, thickness)
    return stack_curvature(stack, delta_t)


def run_sweep(config, workers=1):
    """1-D or 2-D oracle thickness sweep with the argmax row flagged."""
    sw = config.sweep
    if sw is None or not sw.thicknesses:
        raise ConfigError("sweep: no grid defined")
    if sw.two_d:
        keys = [(a, b) for a in sw.thicknesses for b in sw.second_thicknesses]
        items = [(config.stack, ((sw.layer, a), (sw.second_layer, b)), config.delta_T_operating) for a, b in keys]
    else:
        keys = list(sw.thicknesses)
        items = [(config.stack, ((sw.layer, t),), config.delta_T_operating) for t in keys]
    results = _pool_map(_sweep_point, items, workers)
    sweep = list(zip(keys, results))
    best, kappa = argmax_curvature(sweep)
    report = Report("sweep")
    report.tables["sweep.csv"] = sweep_rows(sweep, config.stack.length, sw.two_d)
    if sw.two_d:
        report.summary.update(argmax_thickness_a_m=best[0], argmax_thickness_b_m=best[1])
        report.summary["argmax_on_min_a_boundary"] = best[0] == sw.thicknesses[0]
    else:
        report.summary["argmax_thickness_m"] = best
    report.summary["argmax_curvature_per_m"] = kappa
    report.summary["grid_points"] = len(sweep)
    return report


def _fit(model, state):
    """Signed curvature, radius and fit residual of the deformed bottom centerline."""
    profile = deformed_centerline(model, state)
    try:
        radius, (_, zc), rms = fit_circle(profile)
    except DegenerateFitError:
        return 0.0, math.inf, 0.0, profile
    return math.copysign(1.0 / radius, zc), radius, rms, profile


def _fabricate(config, model):
    lams, tips = [], []
    tip = model.mesh.node_sets["bottom_centerline"][-1]
    z0, dof = model.mesh.node_coords[tip, 2], model.dofmap.index[tip, 2]

    def record(lam, x):
        lams.append(lam)
        tips.append(float(z0 + x[dof]))

    state = newton_solve(model, config.solver, Loads(), Loads(1.0, 0.0, 0.0), on_step=record)
    return state, lams, tips


def run_fabricate(config, workers=1, oracle_only=False):
    """Oracle prediction plus (optionally) the FEM release solve and circle fit."""
    stack = config.stack
    res, summary = _oracle_summary(stack)
    ref = stack_curvature(reference_bilayer(stack.length, stack.width))
    ref_tip = tip_deflection(ref.curvature, stack.length)
    ratio = abs(summary["tip_deflection_oracle_m"]) / abs(ref_tip)
    summary["tip_ratio_to_reference_bilayer"] = ratio
    summary["classification"] = "rather flat" if ratio < FLATNESS_THRESHOLD else "curled"
    report = Report("fabricate", summary)
    if oracle_only or not config.fem:
        return report

    t0 = time.perf_counter()
    model = build_model(config)
    state, lams, tips = _fabricate(config, model)
    report.timings["fem_solve_s"] = time.perf_counter() - t0
    kappa, radius, rms, profile = _fit(model, state)
    report.summary.update(
        curvature_fem_per_m=kappa,
        radius_fem_m=radius,
        fit_rms_m=rms,
        tip_height_fem_m=tip_height(model, state),
        radius_error_vs_oracle=(radius - res.radius) / res.radius if math.isfinite(res.radius) else math.nan,
        newton_iterations=sum(state.iterations),
        load_steps=len(state.iterations),
    )
    report.tables["profile.csv"] = (("x_m", "z_m"), [[float(x), float(z)] for x, z in profile])
    report.tables["load_steps.csv"] = (
        ("load_factor", "tip_height_m", "newton_iterations"),
        [[float(lam), tip, int(n)] for lam, tip, n in zip(lams, tips, state.iterations)],
    )
    report.fields.append(("fabricated.vtk", model, state))
    return report


def _drive_level(args):
    model, settings, fab, end, kind = args
    try:
        state = newton_solve(model, settings, fab.loads, end, state=fab)
    except SolverError as exc:
        return None, str(exc)
    if kind == "actuate":
        values = [joule_power(model, state), peak_temperature(model, state), tip_height(model, state)]
    else:
        values = [tip_height(model, state), electrode_potential(model, state)]
    return (values, state), None


def _run_driven(config, workers, kind):
    block = "electrothermal" if kind == "actuate" else "piezoelectric"
    if block not in config.physics.enabled:
        raise ConfigError(f"physics.blocks: scenario {kind!r} requires the {block!r} block")
    report = Report(kind)
    t0 = time.perf_counter()
    model = build_model(config)
    fab, _, _ = _fabricate(config, model)
    report.timings["fabrication_s"] = time.perf_counter() - t0
    report.summary["tip_height_fabricated_m"] = tip_height(model, fab)
    report.fields.append(("fabricated.vtk", model, fab))

    def end_loads(level):
        return Loads(1.0, level, 0.0) if kind == "actuate" else Loads(1.0, 0.0, level)

    t0 = time.perf_counter()
    items = [(model, config.solver, fab, end_loads(level), kind) for level in config.drive]
    outcomes = _pool_map(_drive_level, items, workers)
    report.timings["drive_levels_s"] = time.perf_counter() - t0

    rows = []
    v_fab = electrode_potential(model, fab) if kind == "sense" else None
    if kind == "sense":
        report.summary["electrode_potential_fabricated_V"] = v_fab
    for i, (level, (result, error)) in enumerate(zip(config.drive, outcomes)):
        if error is not None:
            report.failures.append(f"level {level!r}: {error}")
            rows.append([float(level)] + [math.nan] * 3 + [f"failed: {error}"])
            continue
        values, state = result
        if kind == "sense":
            values = values + [values[1] - v_fab]
        rows.append([float(level)] + [float(v) for v in values] + ["ok"])
        report.fields.append((f"{kind}_{i:02d}.vtk", model, state))
    if kind == "actuate":
        header = ("voltage_V", "power_W", "peak_temperature_K", "tip_height_m", "status")
    else:
        header = ("pressure_Pa", "tip_height_m", "electrode_potential_V", "potential_change_V", "status")
    report.tables[f"{kind}.csv"] = (header, rows)
    report.summary["levels"] = len(rows)
    report.summary["failed_levels"] = len(report.failures)
    return report


def run_actuate(config, workers=1):
    """Heater voltage levels solved from the released state."""
    return _run_driven(config, workers, "actuate")


def run_sense(config, workers=1):
    """Dead-load pressure levels solved from the released state; open-circuit potential."""
    return _run_driven(config, workers, "sense")


def run_scenario(config, workers=1, oracle_only=False):
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    if oracle_only and config.kind in ("actuate", "sense"):
        raise ConfigError(f"scenario {config.kind!r} needs the FEM; --oracle-only does not apply")
    t0 = time.perf_counter()
    if config.kind == "fabricate":
        report = run_fabricate(config, workers, oracle_only)
    elif config.kind == "sweep":
        report = run_sweep(config, workers)
    elif config.kind == "oracle":
        report = run_oracle(config, workers)
    elif config.kind == "actuate":
        report = run_actuate(config, workers)
    else:
        report = run_sense(config, workers)
    report.timings["total_s"] = time.perf_counter() - t0
    return report


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([format_cell(v) for v in row] for row in rows)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else str(float(v))
    return v


def write_outputs(report, config, out_dir, config_text=None, workers=1, write_vtk=None):
    """Write tables, fields, report.txt and manifest.json; returns the list of files."""
    from .vtk import write_fields_vtk

    os.makedirs(out_dir, exist_ok=True)
    files = []
    for name, (header, rows) in report.tables.items():
        write_csv(os.path.join(out_dir, name), header, rows)
        files.append(name)
    if config.output.vtk if write_vtk is None else write_vtk:
        for name, model, state in report.fields:
            write_fields_vtk(os.path.join(out_dir, name), model, state, title=f"mems3d {report.kind} {name}")
            files.append(name)
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.text())
    files.append("report.txt")
    manifest = {
        "artifact": "mems3d",
        "version": __version__,
        "scenario": report.kind,
        "status": "ok" if report.ok else "failed",
        "failures": report.failures,
        "summary": {k: _json_value(v) for k, v in report.summary.items()},
        "timings_s": report.timings,
        "workers": workers,
        "outputs": files,
        "config": config_to_dict(config),
        "config_text": config_text,
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=False, default=_json_value)
        fh.write("\n")
    return files + ["manifest.json"]
