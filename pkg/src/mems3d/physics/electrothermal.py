"""Joule heating source for the resistive microheater."""

import numpy as np

from ..errors import ConfigError


def _conductivity(material):
    if material.electrical_conductivity is None:
        raise ConfigError(f"material {material.name} has no electrical_conductivity; it cannot carry a heater current")
    return material.electrical_conductivity


def joule_source(potential_gradient, material):
    """Volumetric heat sigma |grad phi|^2 (W/m^3)."""
    g = np.asarray(potential_gradient, dtype=float)
    return _conductivity(material) * np.sum(g * g, axis=-1)


def joule_source_gradient(potential_gradient, material):
    """Derivative of the source with respect to grad phi."""
    return 2.0 * _conductivity(material) * np.asarray(potential_gradient, dtype=float)
