import numpy as np
import pytest

from mems3d.fem.assembly import Loads
from mems3d.fem.solver import SolveSettings, newton_solve
from mems3d.materials import LayerSpec, StackSpec, builtin_material, reference_bilayer
from mems3d.mesh import LayeredMeshSpec, generate_layered_mesh
from mems3d.models import build_cantilever_model
from mems3d.physics import PhysicsBlockConfig
from mems3d.units import celsius


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bilayer():
    return reference_bilayer()


@pytest.fixture
def trilayer():
    return StackSpec((
        LayerSpec(builtin_material("Si"), 100e-9),
        LayerSpec(builtin_material("Si3N4"), 250e-9, celsius(800)),
        LayerSpec(builtin_material("Al"), 900e-9, celsius(150)),
    ))


def fabricate(stack, nx=20, ny=2, per_layer=None, finite_strain=True, physics=None, tol=1e-8, **regions):
    """Mesh, model and released state of a stack (test helper)."""
    per_layer = per_layer or (1,) * len(stack.layers)
    mesh = generate_layered_mesh(LayeredMeshSpec(stack, nx, ny, per_layer, **regions))
    model = build_cantilever_model(mesh, stack, physics, finite_strain=finite_strain, pressure=bool(
        physics and "piezoelectric" in physics.enabled))
    settings = SolveSettings(residual_tolerance=tol, finite_strain=finite_strain)
    return model, newton_solve(model, settings, Loads(), Loads(1.0, 0.0, 0.0))


HEATER = PhysicsBlockConfig(enabled=frozenset({"thermoelastic", "electrothermal"}))
PIEZO = PhysicsBlockConfig(enabled=frozenset({"thermoelastic", "piezoelectric"}))


def pytest_terminal_summary(terminalreporter):
    from _acceptance import lines

    results = lines()
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
