"""TOML scenario configuration: parsing, validation and serialization.

Quantities may carry units (``"100 nm"``, ``"800 C"``, ``"130 GPa"``); bare
numbers are SI (temperatures in kelvin). Unknown keys are rejected. See the
README for the full schema.
"""

import sys
from dataclasses import dataclass, field

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .fem.solver import SolveSettings
from .materials import RELEASE_TEMPERATURE, LayerSpec, MaterialSpec, StackSpec, builtin_material, thickness_poled_coupling
from .physics import BLOCKS, PhysicsBlockConfig
from .units import parse_quantity, parse_temperature

SCENARIOS = ("fabricate", "actuate", "sense", "sweep", "oracle")

_DEFAULT_BLOCKS = {
    "actuate": ("thermoelastic", "electrothermal"),
    "sense": ("thermoelastic", "piezoelectric"),
}

_MATERIAL_QUANTITIES = {
    "youngs_modulus": "pressure",
    "poisson_ratio": "dimensionless",
    "thermal_expansion": "thermal_expansion",
    "thermal_conductivity": "thermal_conductivity",
    "electrical_conductivity": "electrical_conductivity",
}

_MISSING = object()


class _Table:
    """Strict view of one TOML table: every key must be consumed."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'document'}: expected a table")
        self.data = dict(data)
        self.path = path

    def key(self, name):
        return f"{self.path}.{name}" if self.path else name

    def pop(self, name, default=_MISSING):
        if name in self.data:
            return self.data.pop(name)
        if default is _MISSING:
            raise ConfigError(f"{self.key(name)}: required key missing")
        return default

    def quantity(self, name, kind, default=_MISSING):
        value = self.pop(name, default)
        if value is default and default is not _MISSING:
            return default
        return parse_quantity(value, kind, self.key(name))

    def integer(self, name, default=_MISSING, minimum=None):
        value = self.pop(name, default)
        if value is default and default is not _MISSING:
            return default
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{self.key(name)}: expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise ConfigError(f"{self.key(name)}: must be >= {minimum}")
        return value

    def boolean(self, name, default):
        value = self.pop(name, default)
        if not isinstance(value, bool):
            raise ConfigError(f"{self.key(name)}: expected true or false, got {value!r}")
        return value

    def string(self, name, default=_MISSING):
        value = self.pop(name, default)
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{self.key(name)}: expected a string, got {value!r}")
        return value

    def table(self, name, required=False):
        value = self.pop(name, _MISSING if required else {})
        return _Table(value, self.key(name))

    def finish(self):
        if self.data:
            names = ", ".join(self.key(k) for k in sorted(self.data))
            raise ConfigError(f"unknown key(s): {names}")


@dataclass(frozen=True)
class MeshSettings:
    divisions_x: int = 20
    divisions_y: int = 2
    divisions_per_layer: tuple | None = None  # None: one element per layer
    heater_region: float | None = None
    piezo_region: float | None = None
    heater_material: str = "poly-Si-heater"
    piezo_material: str = "AlN-piezo"


@dataclass(frozen=True)
class SweepSettings:
    layer: int
    thicknesses: tuple
    second_layer: int | None = None
    second_thicknesses: tuple | None = None

    @property
    def two_d(self):
        return self.second_layer is not None


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "output"
    vtk: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated run description; all values SI."""

    kind: str
    stack: StackSpec
    # user-defined materials by name; the stack already holds full specs
    materials: dict = field(default_factory=dict, compare=False)
    mesh: MeshSettings = field(default_factory=MeshSettings)
    physics: PhysicsBlockConfig = field(default_factory=PhysicsBlockConfig)
    solver: SolveSettings = field(default_factory=SolveSettings)
    fem: bool = True
    delta_T_operating: float = 0.0
    sweep: SweepSettings | None = None
    drive: tuple = ()
    output: OutputSettings = field(default_factory=OutputSettings)

    def material(self, name):
        return self.materials[name] if name in self.materials else builtin_material(name)

    def divisions_per_layer(self):
        if self.mesh.divisions_per_layer is None:
            return (1,) * len(self.stack.layers)
        return self.mesh.divisions_per_layer


def _matrix(value, shape, key):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a numeric matrix") from None
    if arr.shape != shape:
        raise ConfigError(f"{key}: expected shape {shape}, got {arr.shape}")
    return arr


def _parse_material(name, table, known):
    base_name = table.string("base", None)
    base = None
    if base_name is not None:
        base = known[base_name] if base_name in known else builtin_material(base_name)
    values = {}
    for attr, kind in _MATERIAL_QUANTITIES.items():
        v = table.quantity(attr, kind, None)
        if v is None and base is not None:
            v = getattr(base, attr)
        values[attr] = v
    for attr in ("youngs_modulus", "poisson_ratio", "thermal_expansion", "thermal_conductivity"):
        if values[attr] is None:
            raise ConfigError(f"{table.key(attr)}: required key missing (or give `base`)")

    coupling = table.pop("piezo_coupling", None)
    shortcut = {k: table.quantity(k, "piezo_coupling", None) for k in ("e31", "e33", "e15")}
    if coupling is not None and any(v is not None for v in shortcut.values()):
        raise ConfigError(f"{table.key('piezo_coupling')}: give either the matrix or e31/e33/e15, not both")
    if coupling is not None:
        coupling = _matrix(coupling, (6, 3), table.key("piezo_coupling"))
    elif any(v is not None for v in shortcut.values()):
        if shortcut["e31"] is None or shortcut["e33"] is None:
            raise ConfigError(f"{table.key('e33')}: e31 and e33 are both required")
        coupling = thickness_poled_coupling(shortcut["e31"], shortcut["e33"], shortcut["e15"] or 0.0)
    elif base is not None:
        coupling = base.piezo_coupling

    perm = table.pop("permittivity", None)
    if perm is not None:
        if isinstance(perm, list) and len(perm) == 3 and all(isinstance(v, (int, float)) for v in perm):
            perm = np.diag(np.array(perm, dtype=float))
        else:
            perm = _matrix(perm, (3, 3), table.key("permittivity"))
    elif base is not None:
        perm = base.permittivity
    table.finish()
    try:
        return MaterialSpec(name, piezo_coupling=coupling, permittivity=perm, **values)
    except ConfigError as exc:
        raise ConfigError(f"materials.{name}: {exc}") from None


def _grid(value, key):
    """List of lengths, or a ``{start, stop, step}`` table (inclusive)."""
    if isinstance(value, dict):
        t = _Table(value, key)
        start, stop, step = (t.quantity(k, "length") for k in ("start", "stop", "step"))
        t.finish()
        if step <= 0 or stop < start:
            raise ConfigError(f"{key}: need step > 0 and stop >= start")
        n = round((stop - start) / step)
        if abs(start + n * step - stop) > 1e-9 * step:
            raise ConfigError(f"{key}: (stop - start) is not a multiple of step")
        grid = [start + i * step for i in range(n + 1)]
    elif isinstance(value, list):
        grid = [parse_quantity(v, "length", f"{key}[{i}]") for i, v in enumerate(value)]
    else:
        raise ConfigError(f"{key}: expected a list or a {{start, stop, step}} table")
    if not grid:
        raise ConfigError(f"{key}: grid is empty")
    if any(t <= 0 for t in grid):
        raise ConfigError(f"{key}: thicknesses must be > 0")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{key}: thicknesses must be strictly increasing")
    return tuple(grid)


def _layer_index(t, name, n_layers, default=_MISSING):
    idx = t.integer(name, default)
    if idx is None:
        return None
    if not 0 <= idx < n_layers:
        raise ConfigError(f"{t.key(name)}: layer index {idx} out of range for {n_layers} layers")
    return idx


def parse_config(text):
    """Parse and validate a TOML scenario document into a :class:`ScenarioConfig`."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        where = f" at line {line}, column {col}" if line is not None else ""
        raise ConfigError(f"parse error{where}: {getattr(exc, 'msg', exc)}") from None
    return config_from_dict(doc)


def config_from_dict(doc):
    root = _Table(doc, "")
    kind = root.string("scenario")
    if kind not in SCENARIOS:
        raise ConfigError(f"scenario: {kind!r} is not one of {', '.join(SCENARIOS)}")

    materials = {}
    mats = root.table("materials")
    for name in list(mats.data):
        materials[name] = _parse_material(name, _Table(mats.pop(name), f"materials.{name}"), materials)

    def material(name, key):
        if not isinstance(name, str):
            raise ConfigError(f"{key}: expected a material name")
        try:
            return materials[name] if name in materials else builtin_material(name)
        except ConfigError as exc:
            raise ConfigError(f"{key}: {exc}") from None

    st = root.table("stack")
    release = parse_temperature(st.pop("release_temperature", RELEASE_TEMPERATURE), st.key("release_temperature"))
    substrate = material(st.pop("substrate", "Si"), st.key("substrate"))
    width = st.quantity("width", "length", 1.0e-6)
    length = st.quantity("length", "length", 5.0e-6)
    st.finish()
    if not (width > 0 and length > 0):
        raise ConfigError("stack.width and stack.length must be > 0")

    raw_layers = root.pop("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ConfigError("layers: expected a non-empty array of tables")
    layers = []
    for i, raw in enumerate(raw_layers):
        lt = _Table(raw, f"layers[{i}]")
        mat = material(lt.pop("material"), lt.key("material"))
        thickness = lt.quantity("thickness", "length")
        if not thickness > 0:
            raise ConfigError(f"{lt.key('thickness')}: thickness must be > 0")
        t_dep = parse_temperature(lt.pop("deposition_temperature", release), lt.key("deposition_temperature"))
        if t_dep < release:
            raise ConfigError(f"{lt.key('deposition_temperature')}: below the release temperature")
        lt.finish()
        layers.append(LayerSpec(mat, thickness, t_dep))
    stack = StackSpec(tuple(layers), substrate, release, width, length)

    mt = root.table("mesh")
    div = mt.pop("divisions_per_layer", None)
    if div is not None:
        if not isinstance(div, list) or len(div) != len(layers) or not all(
            isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in div
        ):
            raise ConfigError(f"mesh.divisions_per_layer: expected {len(layers)} integers >= 1")
        div = tuple(div)
    mesh = MeshSettings(
        divisions_x=mt.integer("divisions_x", 20, minimum=1),
        divisions_y=mt.integer("divisions_y", 2, minimum=1),
        divisions_per_layer=div,
        heater_region=mt.quantity("heater_region", "length", None),
        piezo_region=mt.quantity("piezo_region", "length", None),
        heater_material=mt.string("heater_material", "poly-Si-heater"),
        piezo_material=mt.string("piezo_material", "AlN-piezo"),
    )
    mt.finish()
    for name in ("heater_region", "piezo_region"):
        extent = getattr(mesh, name)
        if extent is not None and not 0 < extent <= length:
            raise ConfigError(f"mesh.{name}: must lie within (0, stack.length]")
    for name in ("heater_material", "piezo_material"):
        material(getattr(mesh, name), f"mesh.{name}")

    pt = root.table("physics")
    blocks = pt.pop("blocks", list(_DEFAULT_BLOCKS.get(kind, ("thermoelastic",))))
    if not isinstance(blocks, list) or not all(isinstance(b, str) for b in blocks):
        raise ConfigError("physics.blocks: expected a list of block names")
    unknown = set(blocks) - BLOCKS
    if unknown:
        raise ConfigError(f"physics.blocks: unknown block(s) {sorted(unknown)}; available: {sorted(BLOCKS)}")
    physics = PhysicsBlockConfig(
        enabled=frozenset(blocks),
        ambient_temperature=parse_temperature(pt.pop("ambient_temperature", release), pt.key("ambient_temperature")),
        film_coefficient=pt.quantity("film_coefficient", "film_coefficient", 0.0),
    )
    pt.finish()
    if "thermoelastic" not in physics.enabled:
        raise ConfigError("physics.blocks: 'thermoelastic' is required (the mechanical field is always solved)")
    if "electrothermal" in physics.enabled and mesh.heater_region is None:
        raise ConfigError("physics.blocks: 'electrothermal' requires mesh.heater_region")
    if "piezoelectric" in physics.enabled and mesh.piezo_region is None:
        raise ConfigError("physics.blocks: 'piezoelectric' requires mesh.piezo_region")
    if "electrothermal" in physics.enabled and material(mesh.heater_material, "mesh.heater_material").electrical_conductivity is None:
        raise ConfigError(f"mesh.heater_material: material {mesh.heater_material!r} has no electrical_conductivity")
    if "piezoelectric" in physics.enabled and not material(mesh.piezo_material, "mesh.piezo_material").is_piezoelectric:
        raise ConfigError(f"mesh.piezo_material: material {mesh.piezo_material!r} lacks piezo_coupling/permittivity")

    sv = root.table("solver")
    defaults = SolveSettings()
    try:
        solver = SolveSettings(
            residual_tolerance=sv.quantity("residual_tolerance", "dimensionless", defaults.residual_tolerance),
            max_newton_iterations=sv.integer("max_newton_iterations", defaults.max_newton_iterations),
            initial_load_steps=sv.integer("initial_load_steps", defaults.initial_load_steps),
            min_step_fraction=sv.quantity("min_step_fraction", "dimensionless", defaults.min_step_fraction),
            finite_strain=sv.boolean("finite_strain", defaults.finite_strain),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"solver: {exc}") from None
    sv.finish()

    fem, delta_t, sweep, drive = True, 0.0, None, ()
    for other in SCENARIOS:
        if other != kind and other in root.data:
            raise ConfigError(f"{other}: section does not apply to scenario {kind!r}")
    sc = root.table(kind, required=kind in ("sweep", "actuate", "sense"))
    if kind == "fabricate":
        fem = sc.boolean("fem", True)
    elif kind in ("oracle", "sweep"):
        delta_t = sc.quantity("delta_T_operating", "temperature_difference", 0.0)
    if kind == "sweep":
        n = len(layers)
        first = _layer_index(sc, "layer", n)
        grid = _grid(sc.pop("thicknesses"), sc.key("thicknesses"))
        second = _layer_index(sc, "second_layer", n, None)
        raw2 = sc.pop("second_thicknesses", None)
        if (second is None) != (raw2 is None):
            raise ConfigError("sweep: second_layer and second_thicknesses go together")
        if second is not None and second == first:
            raise ConfigError("sweep.second_layer: must differ from sweep.layer")
        sweep = SweepSettings(first, grid, second, None if raw2 is None else _grid(raw2, sc.key("second_thicknesses")))
    elif kind == "actuate":
        drive = _levels(sc, "voltages", "voltage")
        if any(v < 0 for v in drive):
            raise ConfigError("actuate.voltages: must be >= 0")
    elif kind == "sense":
        drive = _levels(sc, "pressures", "pressure")
    sc.finish()

    ot = root.table("output")
    output = OutputSettings(directory=ot.string("directory", "output"), vtk=ot.boolean("vtk", True))
    ot.finish()
    root.finish()
    return ScenarioConfig(
        kind=kind, stack=stack, materials=materials, mesh=mesh, physics=physics, solver=solver,
        fem=fem, delta_T_operating=delta_t, sweep=sweep, drive=drive, output=output,
    )


def _levels(table, name, kind):
    raw = table.pop(name)
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{table.key(name)}: expected a non-empty list")
    values = [parse_quantity(v, kind, f"{table.key(name)}[{i}]") for i, v in enumerate(raw)]
    if len(set(values)) != len(values):
        raise ConfigError(f"{table.key(name)}: duplicate levels")
    return tuple(sorted(values))


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _material_dict(mat):
    out = {k: getattr(mat, k) for k in _MATERIAL_QUANTITIES}
    if out["electrical_conductivity"] is None:
        del out["electrical_conductivity"]
    if mat.piezo_coupling is not None:
        out["piezo_coupling"] = [list(row) for row in mat.piezo_coupling]
    if mat.permittivity is not None:
        out["permittivity"] = [list(row) for row in mat.permittivity]
    return out


def config_to_dict(config):
    """Plain-data form (SI numbers, kelvin) that :func:`config_from_dict` reads back exactly."""
    stack = config.stack
    used = {m.name: m for m in (stack.substrate_material, *(layer.material for layer in stack.layers))}
    for name in (config.mesh.heater_material, config.mesh.piezo_material):
        used.setdefault(name, config.material(name))
    used.update(config.materials)
    doc = {
        "scenario": config.kind,
        "materials": {name: _material_dict(m) for name, m in used.items()},
        "stack": {
            "substrate": stack.substrate_material.name,
            "release_temperature": stack.release_temperature,
            "width": stack.width,
            "length": stack.length,
        },
        "layers": [
            {"material": layer.material.name, "thickness": layer.thickness,
             "deposition_temperature": layer.deposition_temperature}
            for layer in stack.layers
        ],
        "physics": {
            "blocks": sorted(config.physics.enabled),
            "ambient_temperature": config.physics.ambient_temperature,
            "film_coefficient": config.physics.film_coefficient,
        },
        "solver": {
            "residual_tolerance": config.solver.residual_tolerance,
            "max_newton_iterations": config.solver.max_newton_iterations,
            "initial_load_steps": config.solver.initial_load_steps,
            "min_step_fraction": config.solver.min_step_fraction,
            "finite_strain": config.solver.finite_strain,
        },
        "output": {"directory": config.output.directory, "vtk": config.output.vtk},
    }
    mesh = {
        "divisions_x": config.mesh.divisions_x,
        "divisions_y": config.mesh.divisions_y,
        "heater_material": config.mesh.heater_material,
        "piezo_material": config.mesh.piezo_material,
    }
    if config.mesh.divisions_per_layer is not None:
        mesh["divisions_per_layer"] = list(config.mesh.divisions_per_layer)
    for name in ("heater_region", "piezo_region"):
        if getattr(config.mesh, name) is not None:
            mesh[name] = getattr(config.mesh, name)
    doc["mesh"] = mesh
    section = {}
    if config.kind == "fabricate":
        section["fem"] = config.fem
    elif config.kind in ("oracle", "sweep"):
        section["delta_T_operating"] = config.delta_T_operating
    if config.kind == "sweep":
        sw = config.sweep
        section.update(layer=sw.layer, thicknesses=list(sw.thicknesses))
        if sw.two_d:
            section.update(second_layer=sw.second_layer, second_thicknesses=list(sw.second_thicknesses))
    elif config.kind == "actuate":
        section["voltages"] = list(config.drive)
    elif config.kind == "sense":
        section["pressures"] = list(config.drive)
    doc[config.kind] = section
    return doc


def dump_config(config):
    """TOML text of ``config``; every float is written in round-trip precision."""
    return tomli_w.dumps(config_to_dict(config))
