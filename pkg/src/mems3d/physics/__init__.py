"""Constitutive and source-term blocks used by the FEM kernel."""

from dataclasses import dataclass

from ..errors import ConfigError
from ..materials import RELEASE_TEMPERATURE
from .electrothermal import joule_source, joule_source_gradient
from .piezoelectric import piezo_constitutive
from .thermoelastic import isotropic_stiffness, thermo_stress

BLOCKS = frozenset({"thermoelastic", "electrothermal", "piezoelectric"})


@dataclass(frozen=True)
class PhysicsBlockConfig:
    enabled: frozenset = frozenset({"thermoelastic"})
    ambient_temperature: float = RELEASE_TEMPERATURE
    film_coefficient: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "enabled", frozenset(self.enabled))
        unknown = self.enabled - BLOCKS
        if unknown:
            raise ConfigError(f"physics.blocks: unknown block(s) {sorted(unknown)}; available: {sorted(BLOCKS)}")
        if self.film_coefficient < 0:
            raise ConfigError("physics.film_coefficient must be >= 0")


__all__ = [
    "BLOCKS",
    "PhysicsBlockConfig",
    "isotropic_stiffness",
    "joule_source",
    "joule_source_gradient",
    "piezo_constitutive",
    "thermo_stress",
]
