"""Assembly of cantilever FEM models from mesh, stack and physics settings.

Boundary conditions:
  * displacements fixed on the anchor face (x = 0);
  * temperature held at ambient on the anchor face when heat is solved;
  * heater: potential ``drive_scale`` volts on its y = 0 edge, 0 V on y = width;
  * piezo patch: bottom face grounded, top face a single floating electrode.
"""

import numpy as np

from .fem.assembly import Model, face_batch
from .fem.element import ElementGeometry, ElementProperties, voigt_to_tensor, point_state
from .fem.shape import shape_functions
from .materials import layer_eigenstrain
from .physics import PhysicsBlockConfig


def element_eigenstrains(mesh, stack):
    """Inelastic misfit strain of every element, using its own (possibly override) material."""
    per_pair = {}
    out = np.empty(mesh.n_elements)
    for e, (layer_idx, mat_idx) in enumerate(zip(mesh.element_layer, mesh.element_material)):
        key = (int(layer_idx), int(mat_idx))
        if key not in per_pair:
            per_pair[key] = layer_eigenstrain(stack.layers[key[0]], stack, mesh.materials[key[1]])
        out[e] = per_pair[key]
    return out


def build_cantilever_model(mesh, stack, physics=None, finite_strain=True, pressure=True):
    """Coupled model of a clamped multilayer cantilever.

    ``pressure`` adds a unit downward dead pressure on the top surface, scaled
    by ``Loads.traction_scale`` (Pa).
    """
    from .fem.dofs import build_dofmap

    physics = physics or PhysicsBlockConfig()
    heat = "electrothermal" in physics.enabled
    piezo = "piezoelectric" in physics.enabled
    if heat and "heater" not in mesh.element_sets:
        raise ValueError("electrothermal block requires a heater_region in the mesh")
    if piezo and "piezo" not in mesh.element_sets:
        raise ValueError("piezoelectric block requires a piezo_region in the mesh")

    n = mesh.n_nodes
    active = np.zeros((n, 5), dtype=bool)
    active[:, :3] = True
    comps = [0, 1, 2]
    fixed = [(mesh.node_sets["anchor"], c, 0.0, False) for c in ("ux", "uy", "uz")]
    ties = []
    if heat:
        active[:, 3] = True
        fixed.append((mesh.node_sets["anchor"], "T", physics.ambient_temperature, False))
    if heat or piezo:
        if heat:
            active[mesh.node_sets["heater_nodes"], 4] = True
            fixed.append((mesh.node_sets["heater_electrode_pos"], "phi", 1.0, True))
            fixed.append((mesh.node_sets["heater_electrode_neg"], "phi", 0.0, False))
        if piezo:
            active[mesh.node_sets["piezo_nodes"], 4] = True
            fixed.append((mesh.node_sets["piezo_bottom"], "phi", 0.0, False))
            ties.append((mesh.node_sets["piezo_top"], "phi"))
    if heat:
        comps.append(3)
    if heat or piezo:
        comps.append(4)
    dofmap = build_dofmap(n, active, fixed, ties)

    materials = [mesh.materials[i] for i in mesh.element_material]
    conducting = np.zeros(mesh.n_elements, dtype=bool)
    dielectric = np.zeros(mesh.n_elements, dtype=bool)
    if heat:
        conducting[mesh.element_sets["heater"]] = True
    if piezo:
        dielectric[mesh.element_sets["piezo"]] = True
    props = ElementProperties.from_materials(
        materials, element_eigenstrains(mesh, stack), conducting=conducting, dielectric=dielectric
    )
    tractions = [(face_batch(mesh, mesh.face_sets["top_surface"]), np.array([0.0, 0.0, -1.0]))] if pressure else []
    film = None
    if heat and physics.film_coefficient > 0:
        film = (face_batch(mesh, mesh.face_sets["exposed"]), physics.film_coefficient, physics.ambient_temperature)
    return Model(
        mesh=mesh,
        dofmap=dofmap,
        props=props,
        comps=tuple(comps),
        reference_temperature=stack.release_temperature,
        base_temperature=physics.ambient_temperature,
        finite_strain=finite_strain,
        tractions=tractions,
        film=film,
    )


def deformed_centerline(model, state):
    """Deformed (x, z) of the bottom-surface centerline nodes, anchor first."""
    u, _, _ = model.nodal_fields(state.x)
    nodes = model.mesh.node_sets["bottom_centerline"]
    if len(nodes) < 2:
        raise ValueError("mesh has no bottom centerline (use an even divisions_y or any odd one with corner nodes)")
    xyz = model.mesh.node_coords[nodes] + u[nodes]
    return xyz[:, [0, 2]] - xyz[0, [0, 2]]


def tip_height(model, state):
    """Deformed height of the bottom-surface centerline tip node."""
    u, _, _ = model.nodal_fields(state.x)
    nodes = model.mesh.node_sets["bottom_centerline"]
    return float(model.mesh.node_coords[nodes[-1], 2] + u[nodes[-1], 2])


def electrode_potential(model, state):
    """Potential of the floating piezo top electrode."""
    d = model.dofmap.index[model.mesh.node_sets["piezo_top"][0], 4]
    return float(state.x[d])


def _centroid_geometry(mesh):
    n, dn = shape_functions(np.zeros((1, 3)))
    jac = np.einsum("eai,qaj->eqij", mesh.element_coords(), dn)
    dndx = np.einsum("qak,eqkj->eqaj", dn, np.linalg.inv(jac))
    return ElementGeometry(n, dndx, np.linalg.det(jac))


def centroid_von_mises(model, state):
    """Von Mises equivalent of the Cauchy stress at every element centroid (Pa)."""
    mesh = model.mesh
    u, temp, phi = model.nodal_fields(state.x)
    conn = mesh.elements
    ps = point_state(
        _centroid_geometry(mesh), model.props, u[conn], temp[conn], phi[conn], state.loads.misfit_scale,
        model.reference_temperature, model.finite_strain, check_inversion=False,
    )
    S = voigt_to_tensor(ps.stress[:, 0])
    F = ps.F[:, 0]
    J = np.linalg.det(F)
    sigma = np.einsum("eiI,eIJ,ejJ->eij", F, S, F) / J[:, None, None]
    dev = sigma - np.trace(sigma, axis1=1, axis2=2)[:, None, None] * np.eye(3) / 3
    return np.sqrt(1.5 * np.einsum("eij,eij->e", dev, dev))


def joule_power(model, state):
    """Total Joule dissipation sigma |grad phi|^2 integrated over the mesh (W)."""
    if 4 not in model.comps:
        return 0.0
    _, _, phi = model.nodal_fields(state.x)
    g = model.geometry
    grad = np.einsum("ea,eqaj->eqj", phi[model.mesh.elements], g.dNdX)
    q = model.props.electrical_conductivity[:, None] * np.sum(grad**2, axis=-1)
    return float(np.sum(q * g.wdet))


def peak_temperature(model, state):
    _, temp, _ = model.nodal_fields(state.x)
    return float(temp.max())
