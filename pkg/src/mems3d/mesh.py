"""Structured layered meshes of 20-node hexahedra for cantilever stacks.

The beam occupies ``0 <= x <= length``, ``0 <= y <= width`` and
``0 <= z <= total thickness`` with the anchor on the ``x = 0`` face.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshSpecError
from .fem.shape import FACE_NODES, N_NODES, NODE_REF_COORDS, hex_rule, shape_functions
from .materials import StackSpec, builtin_material

COORD_TOL = 1e-12

# lattice offsets (0..2 per axis) of the 20 element nodes
_OFFSETS = (NODE_REF_COORDS + 1).astype(int)


@dataclass(frozen=True)
class LayeredMeshSpec:
    stack: StackSpec
    divisions_x: int
    divisions_y: int
    divisions_per_layer: tuple
    heater_region: float | None = None
    piezo_region: float | None = None
    heater_layer: int = 0
    piezo_layer: int = -1
    heater_material: object = field(default_factory=lambda: builtin_material("poly-Si-heater"))
    piezo_material: object = field(default_factory=lambda: builtin_material("AlN-piezo"))

    def __post_init__(self):
        object.__setattr__(self, "divisions_per_layer", tuple(int(d) for d in self.divisions_per_layer))
        if self.divisions_x < 1 or self.divisions_y < 1:
            raise MeshSpecError("mesh divisions must be >= 1")
        if len(self.divisions_per_layer) != len(self.stack.layers):
            raise MeshSpecError("divisions_per_layer needs one entry per layer")
        if any(d < 1 for d in self.divisions_per_layer):
            raise MeshSpecError("divisions_per_layer entries must be >= 1")
        for name in ("heater_region", "piezo_region"):
            extent = getattr(self, name)
            if extent is not None and not 0 < extent <= self.stack.length:
                raise MeshSpecError(f"{name} must lie within (0, length]")


@dataclass(frozen=True)
class Mesh:
    """Quadratic hexahedral mesh.

    ``element_material`` indexes into ``materials``; ``element_layer`` is the
    stack layer each element belongs to. ``face_sets`` hold (element, local
    face) pairs.
    """

    node_coords: np.ndarray
    elements: np.ndarray
    element_layer: np.ndarray
    element_material: np.ndarray
    materials: tuple
    node_sets: dict
    face_sets: dict
    element_sets: dict

    @property
    def n_nodes(self):
        return len(self.node_coords)

    @property
    def n_elements(self):
        return len(self.elements)

    def element_coords(self):
        return self.node_coords[self.elements]


def _layer_z_grid(stack, divisions):
    z = [0.0]
    for layer, nz, z0 in zip(stack.layers, divisions, stack.interfaces()[:-1]):
        # interfaces are taken from cumulative sums so shared planes coincide exactly
        for k in range(1, 2 * nz + 1):
            z.append(z0 + layer.thickness * k / (2 * nz))
    z = np.array(z)
    z[[2 * sum(divisions[:i]) for i in range(len(divisions) + 1)]] = stack.interfaces()
    return z


def generate_layered_mesh(spec):
    """Tensor-product mesh with z-planes on every layer interface."""
    stack = spec.stack
    if any(layer.thickness <= 0 for layer in stack.layers):
        raise MeshSpecError("zero-thickness layer")
    nx, ny = spec.divisions_x, spec.divisions_y
    nzs = spec.divisions_per_layer
    nz = sum(nzs)
    xs = np.linspace(0.0, stack.length, 2 * nx + 1)
    ys = np.linspace(0.0, stack.width, 2 * ny + 1)
    zs = _layer_z_grid(stack, nzs)

    # serendipity nodes: lattice points with at most one odd index
    i, j, k = np.meshgrid(np.arange(2 * nx + 1), np.arange(2 * ny + 1), np.arange(2 * nz + 1), indexing="ij")
    keep = (i % 2 + j % 2 + k % 2) <= 1
    lookup = np.full(keep.shape, -1, dtype=np.int64)
    lookup[keep] = np.arange(int(keep.sum()))
    coords = np.column_stack([xs[i[keep]], ys[j[keep]], zs[k[keep]]])

    ei, ej, ek = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    ei, ej, ek = ei.ravel(), ej.ravel(), ek.ravel()
    conn = lookup[
        2 * ei[:, None] + _OFFSETS[None, :, 0],
        2 * ej[:, None] + _OFFSETS[None, :, 1],
        2 * ek[:, None] + _OFFSETS[None, :, 2],
    ]
    layer_of_k = np.repeat(np.arange(len(nzs)), nzs)
    elem_layer = layer_of_k[ek]

    materials = [layer.material for layer in stack.layers]
    elem_mat = elem_layer.copy()
    x_centroid = (ei + 0.5) * stack.length / nx
    element_sets = {}
    for tag, extent, layer_index, mat in (
        ("heater", spec.heater_region, spec.heater_layer, spec.heater_material),
        ("piezo", spec.piezo_region, spec.piezo_layer, spec.piezo_material),
    ):
        if extent is None:
            continue
        layer_index = layer_index % len(stack.layers)
        sel = np.flatnonzero((elem_layer == layer_index) & (x_centroid < extent))
        if len(sel) == 0:
            raise MeshSpecError(f"{tag}_region is smaller than one element")
        materials.append(mat)
        elem_mat[sel] = len(materials) - 1
        element_sets[tag] = sel

    h = stack.interfaces()[-1]
    node_sets = {
        "anchor": _near(coords[:, 0], 0.0),
        "tip": _near(coords[:, 0], stack.length),
        "bottom_surface": _near(coords[:, 2], 0.0),
        "top_surface": _near(coords[:, 2], h),
    }
    centre = np.flatnonzero(
        (np.abs(coords[:, 1] - stack.width / 2) <= COORD_TOL) & (np.abs(coords[:, 2]) <= COORD_TOL)
    )
    node_sets["bottom_centerline"] = centre[np.argsort(coords[centre, 0], kind="stable")]

    e_all = np.arange(len(conn))
    face_sets = {
        "anchor": _faces(e_all[ei == 0], 0),
        "tip": _faces(e_all[ei == nx - 1], 1),
        "side_y0": _faces(e_all[ej == 0], 2),
        "side_y1": _faces(e_all[ej == ny - 1], 3),
        "bottom_surface": _faces(e_all[ek == 0], 4),
        "top_surface": _faces(e_all[ek == nz - 1], 5),
    }
    face_sets["exposed"] = np.concatenate(
        [face_sets[n] for n in ("tip", "side_y0", "side_y1", "bottom_surface", "top_surface")]
    )

    if "heater" in element_sets:
        hn = np.unique(conn[element_sets["heater"]])
        node_sets["heater_nodes"] = hn
        node_sets["heater_electrode_pos"] = hn[np.abs(coords[hn, 1]) <= COORD_TOL]
        node_sets["heater_electrode_neg"] = hn[np.abs(coords[hn, 1] - stack.width) <= COORD_TOL]
    if "piezo" in element_sets:
        pe = element_sets["piezo"]
        pn = np.unique(conn[pe])
        z_lo, z_hi = coords[pn, 2].min(), coords[pn, 2].max()
        node_sets["piezo_nodes"] = pn
        node_sets["piezo_bottom"] = pn[np.abs(coords[pn, 2] - z_lo) <= COORD_TOL]
        node_sets["piezo_top"] = pn[np.abs(coords[pn, 2] - z_hi) <= COORD_TOL]

    return Mesh(
        node_coords=coords,
        elements=conn,
        element_layer=elem_layer,
        element_material=elem_mat,
        materials=tuple(materials),
        node_sets=node_sets,
        face_sets=face_sets,
        element_sets=element_sets,
    )


def _near(values, target):
    return np.flatnonzero(np.abs(values - target) <= COORD_TOL)


def _faces(elements, local_face):
    return np.column_stack([elements, np.full(len(elements), local_face)]).astype(np.int64)


def face_node_indices(mesh, faces):
    """Global node indices (n_faces, 8) of the given (element, face) pairs."""
    return np.array([mesh.elements[e, list(FACE_NODES[f])] for e, f in faces], dtype=np.int64).reshape(-1, 8)


def select_nodes(mesh, box):
    """Nodes inside the closed axis-aligned box ``((xmin, ymin, zmin), (xmax, ymax, zmax))``."""
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    if lo.shape != (3,) or hi.shape != (3,) or np.any(hi < lo):
        raise ValueError("box must be ((xmin, ymin, zmin), (xmax, ymax, zmax)) with min <= max")
    inside = np.all((mesh.node_coords >= lo - COORD_TOL) & (mesh.node_coords <= hi + COORD_TOL), axis=1)
    return np.flatnonzero(inside)


def element_volumes(mesh, order=3):
    pts, w = hex_rule(order)
    _, dn = shape_functions(pts)
    jac = np.einsum("eai,qaj->eqij", mesh.element_coords(), dn)
    return np.einsum("eq,q->e", np.linalg.det(jac), w)


def min_jacobian(mesh, order=3):
    pts, _ = hex_rule(order)
    _, dn = shape_functions(pts)
    jac = np.einsum("eai,qaj->eqij", mesh.element_coords(), dn)
    return float(np.linalg.det(jac).min())


def connected_components(mesh):
    """Number of node-connected components of the element graph."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components as cc

    ne = mesh.n_elements
    rows = np.repeat(np.arange(ne), N_NODES)
    graph = coo_matrix((np.ones(rows.size), (rows, mesh.elements.ravel())), shape=(ne, mesh.n_nodes)).tocsr()
    adjacency = graph @ graph.T
    return cc(adjacency, directed=False)[0]
