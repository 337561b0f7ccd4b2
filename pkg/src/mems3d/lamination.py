"""Closed-form multilayer beam model for misfit-driven bending.

Each layer i is a uniaxial beam fibre with modulus E_i carrying an inelastic
strain ``eps_in_i = -misfit_i + alpha_i * dT``. The released beam takes the
axial strain field ``eps(z) = eps0 - kappa * (z - h/2)`` that makes both the
axial force and the bending moment vanish. ``kappa > 0`` means the tip curls
up, away from the substrate.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError, GeometryError
from .materials import layer_eigenstrain


@dataclass(frozen=True)
class CurvatureResult:
    curvature: float
    radius: float
    midplane_strain: float
    per_layer_axial_stress: tuple
    neutral_axis: float


@dataclass(frozen=True)
class DeflectionProfile:
    """Cartesian (x, z) points along a deflected beam, starting at the anchor."""

    points: np.ndarray
    length: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("profile needs at least two (x, z) points")
        if np.any(pts[0] != 0.0):
            raise ValueError("profile must start at the anchor (0, 0)")
        object.__setattr__(self, "points", pts)

    @property
    def tip(self):
        return self.points[-1]


def inelastic_strains(stack, delta_T_operating=0.0):
    return np.array([
        layer_eigenstrain(layer, stack) + layer.material.thermal_expansion * delta_T_operating
        for layer in stack.layers
    ])


def solve_beam(moduli, thicknesses, eps_in):
    """Mid-plane strain and curvature for given moduli, thicknesses and inelastic strains.

    Works internally in units of the total height and the stiffest modulus.
    """
    h = float(np.sum(thicknesses))
    e_ref = float(np.max(moduli))
    zb = np.concatenate([[0.0], np.cumsum(thicknesses)[:-1]]) / h - 0.5
    zt = zb + thicknesses / h
    e = moduli / e_ref
    m0 = e * (zt - zb)
    m1 = e * (zt**2 - zb**2) / 2
    m2 = e * (zt**3 - zb**3) / 3
    # force:  eps0*sum(m0) - k*sum(m1) = sum(m0*eps_in)
    # moment: eps0*sum(m1) - k*sum(m2) = sum(m1*eps_in)
    a = np.array([[m0.sum(), -m1.sum()], [m1.sum(), -m2.sum()]])
    b = np.array([(m0 * eps_in).sum(), (m1 * eps_in).sum()])
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if det == 0.0:
        raise ArithmeticError("singular lamination system")
    eps0 = (b[0] * a[1, 1] - a[0, 1] * b[1]) / det
    k_hat = (a[0, 0] * b[1] - a[1, 0] * b[0]) / det
    return eps0, k_hat / h


def stack_curvature(stack, delta_T_operating=0.0):
    """Mid-plane strain and curvature of the released stack.

    ``delta_T_operating`` is a uniform temperature offset from the release
    temperature (0 for the as-fabricated shape).
    """
    moduli = np.array([layer.material.youngs_modulus for layer in stack.layers])
    thick = np.array([layer.thickness for layer in stack.layers])
    eps_in = inelastic_strains(stack, delta_T_operating)
    eps0, kappa = solve_beam(moduli, thick, eps_in)

    z = stack.interfaces()
    h = z[-1]
    stresses = []
    for i, layer in enumerate(stack.layers):
        def strain(zz):
            return eps0 - kappa * (zz - h / 2)
        stresses.append((
            moduli[i] * (strain(z[i]) - eps_in[i]),
            moduli[i] * (strain(z[i + 1]) - eps_in[i]),
        ))
    neutral = float(np.sum(moduli * thick * (z[:-1] + z[1:]) / 2) / np.sum(moduli * thick))
    radius = math.inf if kappa == 0.0 else 1.0 / abs(kappa)
    return CurvatureResult(float(kappa), radius, float(eps0), tuple(stresses), neutral)


def equilibrium_residuals(stack, result):
    """Relative (force, moment) residuals of a reported stress state.

    Both are normalized by the corresponding integrals of |stress|.
    """
    z = stack.interfaces()
    force = moment = force_scale = moment_scale = 0.0
    for (s_bot, s_top), zb, zt in zip(result.per_layer_axial_stress, z[:-1], z[1:]):
        t = zt - zb
        # stress is linear in z within a layer
        force += (s_bot + s_top) / 2 * t
        slope = (s_top - s_bot) / t
        moment += s_bot * (zt**2 - zb**2) / 2 + slope * (
            (zt**3 - zb**3) / 3 - zb * (zt**2 - zb**2) / 2
        )
        force_scale += (abs(s_bot) + abs(s_top)) / 2 * t
        moment_scale += (abs(s_bot) + abs(s_top)) / 2 * t * max(abs(zb), abs(zt))
    return abs(force) / force_scale if force_scale else 0.0, abs(moment) / moment_scale if moment_scale else 0.0


def sweep_layer_thickness(stack, layer_index, thicknesses, delta_T_operating=0.0):
    """Curvature of ``stack`` as the thickness of one layer is varied."""
    grid = [float(t) for t in thicknesses]
    if not grid:
        raise ValueError("thickness list is empty")
    if not -len(stack.layers) <= layer_index < len(stack.layers):
        raise IndexError(f"layer_index {layer_index} out of range")
    if any(t <= 0 for t in grid):
        raise ValueError("thicknesses must be positive")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("thicknesses must be sorted ascending")
    return [(t, stack_curvature(stack.with_thickness(layer_index, t), delta_T_operating)) for t in grid]


def sweep_two_layers(stack, first, first_grid, second, second_grid, delta_T_operating=0.0):
    """Nested sweep; returns ``[((t_first, t_second), CurvatureResult), ...]`` in row-major order."""
    rows = []
    for t1 in sweep_layer_thickness(stack, first, first_grid):
        inner = sweep_layer_thickness(stack.with_thickness(first, t1[0]), second, second_grid, delta_T_operating)
        rows.extend(((t1[0], t2), res) for t2, res in inner)
    return rows


def argmax_curvature(sweep):
    """Grid point of maximal |curvature|; the first (smallest-thickness) point wins ties."""
    if not sweep:
        raise ValueError("empty sweep")
    best = sweep[0]
    for point in sweep[1:]:
        if abs(point[1].curvature) > abs(best[1].curvature):
            best = point
    return best[0], best[1].curvature


def tip_deflection(curvature, length):
    """Height of the tip of a constant-curvature beam clamped horizontally."""
    if curvature == 0.0:
        return 0.0
    return (1.0 - math.cos(curvature * length)) / curvature


def arc_profile(curvature, length, n_points=50):
    """Circular arc of signed curvature leaving the anchor horizontally."""
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if abs(curvature) * length > 2 * math.pi:
        raise GeometryError("arc longer than a full circle")
    s = np.linspace(0.0, length, n_points)
    if curvature == 0.0:
        pts = np.column_stack([s, np.zeros_like(s)])
    else:
        pts = np.column_stack([np.sin(curvature * s) / curvature, (1.0 - np.cos(curvature * s)) / curvature])
    pts[0] = 0.0
    return DeflectionProfile(pts, length)


def fit_circle(profile):
    """Algebraic (Kasa) least-squares circle through the profile points.

    Returns ``(radius, (xc, zc), rms_residual)`` where the residual is the
    root-mean-square orthogonal distance from the fitted circle.
    """
    pts = profile.points if isinstance(profile, DeflectionProfile) else np.asarray(profile, dtype=float)
    if len(pts) < 3:
        raise DegenerateFitError("need at least 3 points")
    # center and scale first so the normal equations are well conditioned
    mean = pts.mean(axis=0)
    scale = np.abs(pts - mean).max()
    if scale == 0.0:
        raise DegenerateFitError("all points coincide")
    p = (pts - mean) / scale
    a = np.column_stack([p[:, 0], p[:, 1], np.ones(len(p))])
    b = -(p**2).sum(axis=1)
    normal = a.T @ a
    eig = np.linalg.eigvalsh(normal)
    if eig[0] <= 1e-12 * eig[-1]:
        raise DegenerateFitError("points are collinear; radius effectively infinite")
    d, e, f = np.linalg.solve(normal, a.T @ b)
    c = np.array([-d / 2, -e / 2])
    r2 = c @ c - f
    if r2 <= 0:
        raise DegenerateFitError("no real circle fits the points")
    r = math.sqrt(r2)
    resid = np.linalg.norm(p - c, axis=1) - r
    center = c * scale + mean
    return r * scale, (float(center[0]), float(center[1])), float(np.sqrt(np.mean(resid**2)) * scale)


CSV_COLUMNS = ("thickness_m", "curvature_per_m", "radius_m", "tip_deflection_m")


def _fmt(v):
    return f"{v:.17e}"


def sweep_rows(sweep, length, two_d=False):
    """Header and rows of a 1-D or 2-D sweep table; the last column flags the argmax row."""
    best = argmax_curvature(sweep)[0]
    head = (("thickness_a_m", "thickness_b_m") + CSV_COLUMNS[1:]) if two_d else CSV_COLUMNS
    rows = []
    for t, res in sweep:
        ts = list(t) if two_d else [t]
        rows.append(ts + [res.curvature, res.radius, tip_deflection(res.curvature, length), int(t == best)])
    return head + ("argmax",), rows


def format_cell(v):
    """Full-precision CSV field: floats in %.17e, everything else via str."""
    if isinstance(v, float):
        return _fmt(v)
    return str(v)


def write_sweep_csv(path, sweep, length, two_d=False):
    head, rows = sweep_rows(sweep, length, two_d)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(head)
        w.writerows([format_cell(v) for v in row] for row in rows)
