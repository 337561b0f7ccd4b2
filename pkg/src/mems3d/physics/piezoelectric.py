"""Linear piezoelectricity in stress-charge form, poled along z."""

import numpy as np

from ..errors import ConfigError
from .thermoelastic import from_voigt_stress, isotropic_stiffness, to_voigt_strain


def piezo_constitutive(strain, electric_field, material):
    """Return (stress 3x3, electric displacement 3-vector).

    stress = C strain - e E,  D = e^T strain + permittivity E, with ``e`` the
    material's 6x3 coupling matrix.
    """
    if not material.is_piezoelectric:
        raise ConfigError(f"material {material.name} lacks piezo_coupling/permittivity")
    e = material.piezo_matrix()
    kappa = material.permittivity_matrix()
    c = isotropic_stiffness(material.youngs_modulus, material.poisson_ratio)
    ev = to_voigt_strain(strain)
    field = np.asarray(electric_field, dtype=float)
    stress = c @ ev - e @ field
    disp = e.T @ ev + kappa @ field
    return from_voigt_stress(stress), disp
