"""Isotropic thermoelasticity with an additive inelastic strain.

Voigt order is (11, 22, 33, 23, 13, 12) with engineering shear strains.
"""

import numpy as np

from ..materials import RELEASE_TEMPERATURE

IDENTITY_VOIGT = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])


def lame(youngs_modulus, poisson_ratio):
    e, nu = np.asarray(youngs_modulus, dtype=float), np.asarray(poisson_ratio, dtype=float)
    lam = e * nu / ((1 + nu) * (1 - 2 * nu))
    mu = e / (2 * (1 + nu))
    return lam, mu


def isotropic_stiffness(youngs_modulus, poisson_ratio):
    """6x6 stiffness; broadcasts over array inputs to (..., 6, 6)."""
    lam, mu = lame(youngs_modulus, poisson_ratio)
    c = np.zeros(np.shape(lam) + (6, 6))
    c[..., :3, :3] = lam[..., None, None]
    for i in range(3):
        c[..., i, i] += 2 * mu
        c[..., 3 + i, 3 + i] = mu
    return c


def to_voigt_strain(eps):
    eps = np.asarray(eps, dtype=float)
    return np.stack([eps[..., 0, 0], eps[..., 1, 1], eps[..., 2, 2],
                     2 * eps[..., 1, 2], 2 * eps[..., 0, 2], 2 * eps[..., 0, 1]], axis=-1)


def from_voigt_stress(s):
    s = np.asarray(s, dtype=float)
    return np.stack([
        np.stack([s[..., 0], s[..., 5], s[..., 4]], axis=-1),
        np.stack([s[..., 5], s[..., 1], s[..., 3]], axis=-1),
        np.stack([s[..., 4], s[..., 3], s[..., 2]], axis=-1),
    ], axis=-2)


def inelastic_strain(temperature, alpha, eigenstrain, reference_temperature=RELEASE_TEMPERATURE):
    return eigenstrain + alpha * (temperature - reference_temperature)


def thermo_stress(strain, temperature, material, eigenstrain, reference_temperature=RELEASE_TEMPERATURE):
    """Stress C : (strain - (eigenstrain + alpha (T - T_ref)) I) as a 3x3 tensor."""
    g = inelastic_strain(temperature, material.thermal_expansion, eigenstrain, reference_temperature)
    c = isotropic_stiffness(material.youngs_modulus, material.poisson_ratio)
    elastic = to_voigt_strain(strain) - g * IDENTITY_VOIGT
    return from_voigt_stress(c @ elastic)
