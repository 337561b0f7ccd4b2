"""Total-Lagrangian coupled element kernel for 20-node hexahedra.

All routines are vectorized over a batch of elements. Unknowns per node are
any subset of (ux, uy, uz, T, phi), given as component indices 0..4.

Mechanics: Green-Lagrange strain E, Saint Venant-Kirchhoff stress
``S = C (E - g I) - e Ef`` with inelastic strain ``g = s * eigenstrain +
alpha (T - T_ref)`` and electric field ``Ef = -grad phi``. Heat: steady
conduction with Joule source ``sigma |grad phi|^2``. Charge: current
conservation in conductors, Gauss law ``div D = 0`` in dielectrics. Heat
conduction and charge transport use the reference configuration.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ElementInversionError
from ..physics.thermoelastic import IDENTITY_VOIGT, isotropic_stiffness
from .shape import hex_rule, shape_functions


@dataclass(frozen=True)
class ElementGeometry:
    N: np.ndarray  # (nq, 20)
    dNdX: np.ndarray  # (ne, nq, 20, 3)
    wdet: np.ndarray  # (ne, nq) quadrature weight times det J


def element_geometry(coords, order=3):
    """Reference-configuration gradients for element nodal coordinates (ne, 20, 3)."""
    pts, w = hex_rule(order)
    n, dn = shape_functions(pts)
    jac = np.einsum("eai,qaj->eqij", coords, dn)
    det = np.linalg.det(jac)
    if np.any(det <= 0):
        bad = int(np.argmin(det.min(axis=1)))
        raise ElementInversionError(f"element {bad} has a non-positive reference Jacobian")
    inv = np.linalg.inv(jac)
    dndx = np.einsum("qak,eqkj->eqaj", dn, inv)
    return ElementGeometry(n, dndx, det * w[None, :])


@dataclass(frozen=True)
class ElementProperties:
    """Per-element constants, all arrays with leading dimension ne."""

    stiffness: np.ndarray  # (ne, 6, 6)
    alpha: np.ndarray
    eigenstrain: np.ndarray
    conductivity: np.ndarray
    electrical_conductivity: np.ndarray
    piezo: np.ndarray  # (ne, 6, 3)
    permittivity: np.ndarray  # (ne, 3, 3)

    @classmethod
    def from_materials(cls, materials, eigenstrain, conducting=None, dielectric=None):
        """Build from a per-element material list.

        ``conducting``/``dielectric`` are boolean masks selecting where charge
        transport and piezoelectric coupling are active (default: wherever the
        material provides the constants).
        """
        ne = len(materials)
        sig = np.array([m.electrical_conductivity or 0.0 for m in materials])
        pz = np.array([m.piezo_matrix() for m in materials]).reshape(ne, 6, 3)
        perm = np.array([m.permittivity_matrix() for m in materials]).reshape(ne, 3, 3)
        if conducting is not None:
            sig = np.where(conducting, sig, 0.0)
        if dielectric is not None:
            pz = np.where(np.asarray(dielectric)[:, None, None], pz, 0.0)
            perm = np.where(np.asarray(dielectric)[:, None, None], perm, 0.0)
        return cls(
            stiffness=isotropic_stiffness(
                np.array([m.youngs_modulus for m in materials]), np.array([m.poisson_ratio for m in materials])
            ),
            alpha=np.array([m.thermal_expansion for m in materials]),
            eigenstrain=np.asarray(eigenstrain, dtype=float),
            conductivity=np.array([m.thermal_conductivity for m in materials]),
            electrical_conductivity=sig,
            piezo=pz,
            permittivity=perm,
        )

    def subset(self, idx):
        return ElementProperties(*(getattr(self, f)[idx] for f in self.__dataclass_fields__))


def _voigt(e):
    return np.stack([e[..., 0, 0], e[..., 1, 1], e[..., 2, 2],
                     2 * e[..., 1, 2], 2 * e[..., 0, 2], 2 * e[..., 0, 1]], axis=-1)


def voigt_to_tensor(s):
    out = np.empty(s.shape[:-1] + (3, 3))
    out[..., 0, 0], out[..., 1, 1], out[..., 2, 2] = s[..., 0], s[..., 1], s[..., 2]
    out[..., 1, 2] = out[..., 2, 1] = s[..., 3]
    out[..., 0, 2] = out[..., 2, 0] = s[..., 4]
    out[..., 0, 1] = out[..., 1, 0] = s[..., 5]
    return out


def _strain_operator(F, dN):
    """B with dE_voigt = B du: shape (ne, nq, 6, 20, 3)."""
    # P[J, K, a, i] = F[i, J] dN[a, K]
    P = np.einsum("eqiJ,eqaK->eqJKai", F, dN)
    return np.stack([
        P[:, :, 0, 0], P[:, :, 1, 1], P[:, :, 2, 2],
        P[:, :, 1, 2] + P[:, :, 2, 1],
        P[:, :, 0, 2] + P[:, :, 2, 0],
        P[:, :, 0, 1] + P[:, :, 1, 0],
    ], axis=2)


@dataclass
class PointState:
    F: np.ndarray
    strain: np.ndarray  # Voigt GL strain (ne, nq, 6)
    elastic_strain: np.ndarray
    stress: np.ndarray  # Voigt 2nd PK (ne, nq, 6)
    displacement_field: np.ndarray  # D (ne, nq, 3)
    temperature: np.ndarray  # (ne, nq)
    grad_T: np.ndarray
    grad_phi: np.ndarray


def point_state(geom, props, u, temp, phi, load_factor, reference_temperature, finite_strain, check_inversion=True):
    ne, nq = geom.wdet.shape
    dN = geom.dNdX
    H = np.einsum("eai,eqaj->eqij", u, dN)
    eye = np.eye(3)
    if finite_strain:
        F = eye + H
        if check_inversion:
            det = np.linalg.det(F)
            if np.any(det <= 0):
                bad = int(np.argmin(det.min(axis=1)))
                raise ElementInversionError(f"element {bad} inverted (det F = {det.min():.3e})")
        E = 0.5 * (H + np.swapaxes(H, -1, -2) + np.einsum("eqki,eqkj->eqij", H, H))
    else:
        F = np.broadcast_to(eye, (ne, nq, 3, 3))
        E = 0.5 * (H + np.swapaxes(H, -1, -2))
    Ev = _voigt(E)
    # interpolate the excess over T_ref so a uniform reference field is exactly zero
    dTq = np.einsum("qa,ea->eq", geom.N, temp - reference_temperature)
    Tq = reference_temperature + dTq
    g = load_factor * props.eigenstrain[:, None] + props.alpha[:, None] * dTq
    Eel = Ev - g[..., None] * IDENTITY_VOIGT
    gphi = np.einsum("ea,eqaj->eqj", phi, dN)
    Ef = -gphi
    S = np.einsum("eIJ,eqJ->eqI", props.stiffness, Eel) - np.einsum("eIK,eqK->eqI", props.piezo, Ef)
    D = np.einsum("eIK,eqI->eqK", props.piezo, Eel) + np.einsum("eKL,eqL->eqK", props.permittivity, Ef)
    gT = np.einsum("ea,eqaj->eqj", temp - reference_temperature, dN)
    return PointState(F, Ev, Eel, S, D, Tq, gT, gphi)


def element_residual_tangent(
    geom, props, u, temp, phi, *, comps, load_factor=1.0, reference_temperature,
    finite_strain=True, tangent=True,
):
    """Internal residual (ne, 20*w) and tangent (ne, 20*w, 20*w) for active ``comps``.

    ``u`` (ne, 20, 3), ``temp`` (ne, 20) and ``phi`` (ne, 20) are nodal
    values; fields that are not unknowns still enter through these arrays.
    Local dofs are node-major in the order of ``comps``.
    """
    comps = tuple(comps)
    width = len(comps)
    ne, nq = geom.wdet.shape
    has_u = 0 in comps
    has_T = 3 in comps
    has_phi = 4 in comps
    if has_u and comps[:3] != (0, 1, 2):
        raise ValueError("displacement components must come first and together")
    pos_T = comps.index(3) if has_T else None
    pos_p = comps.index(4) if has_phi else None

    dN = geom.dNdX
    N = geom.N
    w = geom.wdet
    ps = point_state(geom, props, u, temp, phi, load_factor, reference_temperature, finite_strain)

    R = np.zeros((ne, 20, width))
    K = np.zeros((ne, 20, width, 20, width)) if tangent else None

    sig_e = props.electrical_conductivity
    if has_u:
        B = _strain_operator(ps.F, dN)  # (ne, nq, 6, 20, 3)
        Bw = B * w[:, :, None, None, None]
        R[:, :, :3] = np.einsum("eqIai,eqI->eai", Bw, ps.stress)
        if tangent:
            Bf = B.reshape(ne, nq, 6, 60)
            Bwf = Bw.reshape(ne, nq * 6, 60)
            CB = np.matmul(props.stiffness[:, None], Bf).reshape(ne, nq * 6, 60)
            kuu = np.matmul(np.swapaxes(Bwf, 1, 2), CB).reshape(ne, 20, 3, 20, 3)
            if finite_strain:
                dNS = np.matmul(dN * w[:, :, None, None], voigt_to_tensor(ps.stress))  # (ne, nq, 20, 3)
                G = np.matmul(
                    dNS.transpose(0, 2, 1, 3).reshape(ne, 20, nq * 3),
                    dN.transpose(0, 1, 3, 2).reshape(ne, nq * 3, 20),
                )
                for i in range(3):
                    kuu[:, :, i, :, i] += G
            K[:, :, :3, :, :3] = kuu
            if has_T:
                cma = np.einsum("eIJ,J->eI", props.stiffness, IDENTITY_VOIGT) * props.alpha[:, None]
                K[:, :, :3, :, pos_T] = -np.einsum("eqIai,eI,qb->eaib", Bw, cma, N, optimize=True)
            if has_phi:
                K[:, :, :3, :, pos_p] = np.einsum("eqIai,eIK,eqbK->eaib", Bw, props.piezo, dN, optimize=True)

    if has_T:
        k = props.conductivity
        q = sig_e[:, None] * np.sum(ps.grad_phi**2, axis=-1)  # (ne, nq)
        R[:, :, pos_T] = (
            np.einsum("eqaj,eqj,eq->ea", dN, ps.grad_T, w, optimize=True) * k[:, None]
            - np.einsum("qa,eq,eq->ea", N, q, w, optimize=True)
        )
        if tangent:
            K[:, :, pos_T, :, pos_T] = np.einsum("eqaj,eqbj,eq->eab", dN, dN, w, optimize=True) * k[:, None, None]
            if has_phi:
                dq = 2.0 * sig_e[:, None, None] * ps.grad_phi  # (ne, nq, 3)
                K[:, :, pos_T, :, pos_p] = -np.einsum("qa,eqj,eqbj,eq->eab", N, dq, dN, w, optimize=True)

    if has_phi:
        R[:, :, pos_p] = (
            np.einsum("eqaj,eqj,eq->ea", dN, ps.grad_phi, w, optimize=True) * sig_e[:, None]
            + np.einsum("eqaj,eqj,eq->ea", dN, ps.displacement_field, w, optimize=True)
        )
        if tangent:
            dnw = dN * w[:, :, None, None]
            K[:, :, pos_p, :, pos_p] = (
                np.einsum("eqaj,eqbj->eab", dnw, dN) * sig_e[:, None, None]
                - np.einsum("eqaK,eKL,eqbL->eab", dnw, props.permittivity, dN, optimize=True)
            )
            if has_u:
                K[:, :, pos_p, :, :3] = np.einsum("eqaK,eIK,eqIbj->eabj", dnw, props.piezo, B, optimize=True)
            if has_T:
                em = np.einsum("eIK,I->eK", props.piezo, IDENTITY_VOIGT) * props.alpha[:, None]
                K[:, :, pos_p, :, pos_T] = -np.einsum("eqaK,eK,qb->eab", dnw, em, N, optimize=True)

    R = R.reshape(ne, 20 * width)
    if tangent:
        K = K.reshape(ne, 20 * width, 20 * width)
    return R, K


def element_energy(geom, props, u, temp, phi, load_factor, reference_temperature, finite_strain=True):
    """Electric enthalpy per element: 1/2 Eel C Eel - Eel e Ef - 1/2 Ef k Ef."""
    ps = point_state(geom, props, u, temp, phi, load_factor, reference_temperature, finite_strain)
    Ef = -ps.grad_phi
    mech = 0.5 * np.einsum("eqI,eIJ,eqJ->eq", ps.elastic_strain, props.stiffness, ps.elastic_strain, optimize=True)
    coupling = np.einsum("eqI,eIK,eqK->eq", ps.elastic_strain, props.piezo, Ef, optimize=True)
    diel = 0.5 * np.einsum("eqK,eKL,eqL->eq", Ef, props.permittivity, Ef, optimize=True)
    return np.einsum("eq,eq->e", mech - coupling - diel, geom.wdet)


def strain_energy(geom, props, u, temp, load_factor, reference_temperature, finite_strain=True):
    phi = np.zeros(temp.shape)
    ps = point_state(geom, props, u, temp, phi, load_factor, reference_temperature, finite_strain)
    dens = 0.5 * np.einsum("eqI,eIJ,eqJ->eq", ps.elastic_strain, props.stiffness, ps.elastic_strain, optimize=True)
    return np.einsum("eq,eq->e", dens, geom.wdet)
