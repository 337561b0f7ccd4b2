"""Material constants and layer-stack descriptions.

All values are SI (Pa, 1/K, W/(m K), S/m, C/m^2, F/m, K, m). Stacks are
ordered bottom (substrate side) to top.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .units import celsius

RELEASE_TEMPERATURE = celsius(20.0)


def _as_matrix(value, shape, name):
    if value is None:
        return None
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ConfigError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name}: entries must be finite")
    return tuple(tuple(float(v) for v in row) for row in arr)


@dataclass(frozen=True)
class MaterialSpec:
    """Elastic, thermal, electrical and piezoelectric constants of one material.

    ``piezo_coupling`` is the 6x3 stress-coupling matrix ``e`` in Voigt order
    (11, 22, 33, 23, 13, 12) so that ``stress = C strain - e E``. Matrices are
    stored as nested tuples to keep instances hashable; use
    :meth:`piezo_matrix` and :meth:`permittivity_matrix` for arrays.
    """

    name: str
    youngs_modulus: float
    poisson_ratio: float
    thermal_expansion: float
    thermal_conductivity: float
    electrical_conductivity: float | None = None
    piezo_coupling: tuple | None = None
    permittivity: tuple | None = None

    def __post_init__(self):
        if not self.youngs_modulus > 0:
            raise ConfigError(f"material {self.name}: youngs_modulus must be > 0")
        if not -1.0 < self.poisson_ratio < 0.5:
            raise ConfigError(f"material {self.name}: poisson_ratio must lie in (-1, 0.5)")
        if not np.isfinite(self.thermal_expansion):
            raise ConfigError(f"material {self.name}: thermal_expansion must be finite")
        if not self.thermal_conductivity >= 0:
            raise ConfigError(f"material {self.name}: thermal_conductivity must be >= 0")
        if self.electrical_conductivity is not None and not self.electrical_conductivity >= 0:
            raise ConfigError(f"material {self.name}: electrical_conductivity must be >= 0")
        object.__setattr__(
            self, "piezo_coupling", _as_matrix(self.piezo_coupling, (6, 3), f"material {self.name}: piezo_coupling")
        )
        perm = _as_matrix(self.permittivity, (3, 3), f"material {self.name}: permittivity")
        if perm is not None:
            p = np.array(perm)
            if not np.allclose(p, p.T, rtol=0, atol=1e-12 * np.abs(p).max()):
                raise ConfigError(f"material {self.name}: permittivity must be symmetric")
            if np.linalg.eigvalsh(p).min() <= 0:
                raise ConfigError(f"material {self.name}: permittivity must be positive definite")
        object.__setattr__(self, "permittivity", perm)

    @property
    def is_piezoelectric(self):
        return self.piezo_coupling is not None and self.permittivity is not None

    def piezo_matrix(self):
        return np.array(self.piezo_coupling if self.piezo_coupling is not None else np.zeros((6, 3)), dtype=float)

    def permittivity_matrix(self):
        return np.array(self.permittivity if self.permittivity is not None else np.zeros((3, 3)), dtype=float)

    def with_overrides(self, **changes):
        return replace(self, **changes)


def thickness_poled_coupling(e31, e33, e15=0.0):
    """6x3 coupling matrix of a transversely isotropic film poled along z."""
    e = np.zeros((6, 3))
    e[0, 2] = e[1, 2] = e31
    e[2, 2] = e33
    e[3, 1] = e[4, 0] = e15
    return e


# Si and Si3N4 elastic/thermal values are the measured bilayer data; everything
# else (conductivities, Al, poly-Si, AlN) are handbook defaults.
_BUILTIN = {
    "Si": MaterialSpec("Si", 130.0e9, 0.279, 2.33e-6, 148.0),
    "Si3N4": MaterialSpec("Si3N4", 270.0e9, 0.270, 6.06e-6, 3.0),
    "Al": MaterialSpec("Al", 70.0e9, 0.35, 23.1e-6, 237.0, electrical_conductivity=3.5e7),
    "poly-Si-heater": MaterialSpec("poly-Si-heater", 160.0e9, 0.22, 2.6e-6, 30.0, electrical_conductivity=5.0e4),
    "AlN-piezo": MaterialSpec(
        "AlN-piezo", 345.0e9, 0.24, 4.15e-6, 180.0,
        piezo_coupling=thickness_poled_coupling(-0.58, 1.55, -0.48),
        permittivity=np.diag([8.0e-11, 8.0e-11, 9.0e-11]),
    ),
}


def builtin_material(name):
    """Return the registered constants for ``name``."""
    try:
        return _BUILTIN[name]
    except KeyError:
        raise ConfigError(
            f"unknown material {name!r}; available: {', '.join(sorted(_BUILTIN))}"
        ) from None


def builtin_names():
    return tuple(sorted(_BUILTIN))


@dataclass(frozen=True)
class LayerSpec:
    material: MaterialSpec
    thickness: float
    deposition_temperature: float = RELEASE_TEMPERATURE

    def __post_init__(self):
        if not self.thickness > 0:
            raise ConfigError(f"layer {self.material.name}: thickness must be > 0")


@dataclass(frozen=True)
class StackSpec:
    """Ordered layers (index 0 at the bottom) released from a substrate."""

    layers: tuple
    substrate_material: MaterialSpec = field(default_factory=lambda: builtin_material("Si"))
    release_temperature: float = RELEASE_TEMPERATURE
    width: float = 1.0e-6
    length: float = 5.0e-6

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ConfigError("stack needs at least one layer")
        if not (self.width > 0 and self.length > 0):
            raise ConfigError("stack width and length must be > 0")
        for i, layer in enumerate(self.layers):
            if layer.deposition_temperature < self.release_temperature:
                raise ConfigError(
                    f"layers[{i}].deposition_temperature is below the release temperature"
                )

    @property
    def total_thickness(self):
        return sum(layer.thickness for layer in self.layers)

    def interfaces(self):
        """z-coordinates of layer boundaries, bottom to top (length n+1)."""
        return np.concatenate([[0.0], np.cumsum([layer.thickness for layer in self.layers])])

    def with_thickness(self, index, thickness):
        layers = list(self.layers)
        layers[index] = replace(layers[index], thickness=thickness)
        return replace(self, layers=tuple(layers))


def misfit_strain(layer, stack, material=None):
    """Mismatch strain a layer carries at release relative to the substrate.

    Positive when the layer would contract more than the substrate on cooling
    from its deposition temperature, i.e. when the bonded layer is held in
    tension. ``material`` substitutes the layer's material (used for patch
    regions that replace part of a layer).
    """
    if not any(layer is other or layer == other for other in stack.layers):
        raise ConfigError("layer does not belong to the stack")
    mat = material if material is not None else layer.material
    alpha_sub = stack.substrate_material.thermal_expansion
    return (mat.thermal_expansion - alpha_sub) * (layer.deposition_temperature - stack.release_temperature)


def layer_eigenstrain(layer, stack, material=None):
    """Inelastic (stress-free) in-plane strain of a released layer; the negative of the misfit."""
    return -misfit_strain(layer, stack, material)


def reference_bilayer(length=5.0e-6, width=1.0e-6):
    """Si 100 nm / Si3N4 100 nm (deposited at 800 C) released at 20 C."""
    return StackSpec(
        (
            LayerSpec(builtin_material("Si"), 100e-9),
            LayerSpec(builtin_material("Si3N4"), 100e-9, celsius(800.0)),
        ),
        width=width,
        length=length,
    )
