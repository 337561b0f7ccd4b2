"""Global residual/tangent assembly with Dirichlet reduction.

Element batches are evaluated in fixed chunks and scattered in element order,
so results are bitwise reproducible for a given mesh and chunk size.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..mesh import face_node_indices
from .dofs import COMPONENTS
from .element import element_energy, element_geometry, element_residual_tangent
from .shape import FACE_NODES, face_rule, shape_functions

CHUNK = 256


@dataclass(frozen=True)
class Loads:
    """Scalars ramped by the continuation driver.

    ``misfit_scale`` multiplies element eigenstrains, ``drive_scale`` the
    driven Dirichlet values (electrode voltages), ``traction_scale`` the
    surface tractions.
    """

    misfit_scale: float = 0.0
    drive_scale: float = 0.0
    traction_scale: float = 0.0

    def interpolate(self, other, t):
        if t == 0.0:
            return self
        if t == 1.0:
            return other
        return Loads(*(a + t * (b - a) for a, b in zip(
            (self.misfit_scale, self.drive_scale, self.traction_scale),
            (other.misfit_scale, other.drive_scale, other.traction_scale),
        )))


@dataclass
class FaceBatch:
    """Quadrature data for a set of boundary faces."""

    nodes: np.ndarray  # (nf, 8) global node ids
    N: np.ndarray  # (nf, nq, 8) face-node basis values
    dA: np.ndarray  # (nf, nq) weight * area element
    normal: np.ndarray  # (nf, nq, 3) outward unit normal in the reference configuration


def face_batch(mesh, faces, order=3):
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 2)
    nf = len(faces)
    out_n = np.zeros((nf, order * order, 8))
    out_da = np.zeros((nf, order * order))
    out_nrm = np.zeros((nf, order * order, 3))
    for f in range(6):
        sel = np.flatnonzero(faces[:, 1] == f)
        if len(sel) == 0:
            continue
        pts, w, (t0, t1) = face_rule(f, order)
        n, dn = shape_functions(pts)
        coords = mesh.node_coords[mesh.elements[faces[sel, 0]]]  # (k, 20, 3)
        a = np.einsum("eai,qa->eqi", coords, dn[:, :, t0])
        b = np.einsum("eai,qa->eqi", coords, dn[:, :, t1])
        cr = np.cross(a, b)
        area = np.linalg.norm(cr, axis=-1)
        nrm = cr / area[..., None]
        # orient outward: away from the element centroid
        centre = coords.mean(axis=1)
        xq = np.einsum("eai,qa->eqi", coords, n)
        flip = np.sign(np.einsum("eqi,eqi->eq", nrm, xq - centre[:, None, :]))
        out_nrm[sel] = nrm * flip[..., None]
        out_n[sel] = n[:, list(FACE_NODES[f])][None]
        out_da[sel] = area * w[None, :]
    return FaceBatch(face_node_indices(mesh, faces), out_n, out_da, out_nrm)


@dataclass
class Model:
    """Everything needed to evaluate the discrete coupled system.

    ``comps`` lists the active node components (subset of 0..4).
    ``base_temperature`` is used where T is not an unknown.
    ``tractions`` is a list of (FaceBatch, 3-vector traction per unit scale).
    ``film`` is (FaceBatch, coefficient, ambient temperature) or None.
    """

    mesh: object
    dofmap: object
    props: object
    comps: tuple
    reference_temperature: float
    base_temperature: float
    finite_strain: bool = True
    tractions: list = field(default_factory=list)
    film: tuple | None = None
    geometry: object = None

    def __post_init__(self):
        self.comps = tuple(self.comps)
        if self.geometry is None:
            self.geometry = element_geometry(self.mesh.element_coords())
        self._edofs = self.dofmap.index[self.mesh.elements][:, :, list(self.comps)].reshape(len(self.mesh.elements), -1)

    @property
    def element_dofs(self):
        return self._edofs

    def nodal_fields(self, x):
        """Split a full dof vector into nodal u (n, 3), T (n,), phi (n,)."""
        n = self.mesh.n_nodes
        values = np.zeros((n, len(COMPONENTS)))
        values[:, 3] = self.base_temperature
        idx = self.dofmap.index
        for c in range(len(COMPONENTS)):
            m = idx[:, c] >= 0
            values[m, c] = x[idx[m, c]]
        return values[:, :3], values[:, 3], values[:, 4]

    def initial_vector(self, loads):
        """Dof vector at rest: zero displacement, base temperature, prescribed values applied."""
        x = np.zeros(self.dofmap.n_dofs)
        t_dofs = self.dofmap.index[:, 3]
        x[t_dofs[t_dofs >= 0]] = self.base_temperature
        x[self.dofmap.prescribed] = self.dofmap.prescribed_values(loads.drive_scale)[self.dofmap.prescribed]
        return x


def _element_chunks(ne):
    return [np.arange(s, min(s + CHUNK, ne)) for s in range(0, ne, CHUNK)]


def assemble(model, x, loads, tangent=True):
    """Full residual r, reference magnitude |r|, and sparse tangent over all dofs.

    ``ref`` accumulates absolute element and load contributions so that
    ``|r_i| <= ref_i`` always; it sets the scale for convergence checks.
    """
    mesh = model.mesh
    ndof = model.dofmap.n_dofs
    u, temp, phi = model.nodal_fields(x)
    r = np.zeros(ndof)
    ref = np.zeros(ndof)
    rows, cols, vals = [], [], []
    g = model.geometry
    for idx in _element_chunks(mesh.n_elements):
        conn = mesh.elements[idx]
        sub = type(g)(g.N, g.dNdX[idx], g.wdet[idx])
        re, ke = element_residual_tangent(
            sub, model.props.subset(idx), u[conn], temp[conn], phi[conn],
            comps=model.comps, load_factor=loads.misfit_scale,
            reference_temperature=model.reference_temperature,
            finite_strain=model.finite_strain, tangent=tangent,
        )
        ed = model.element_dofs[idx]
        mask = ed >= 0
        np.add.at(r, ed[mask], re[mask])
        np.add.at(ref, ed[mask], np.abs(re[mask]))
        if tangent:
            both = mask[:, :, None] & mask[:, None, :]
            nd = ed.shape[1]
            rows.append(np.broadcast_to(ed[:, :, None], (len(idx), nd, nd))[both])
            cols.append(np.broadcast_to(ed[:, None, :], (len(idx), nd, nd))[both])
            vals.append(ke[both])

    if 0 in model.comps:
        for faces, vector in model.tractions:
            f = loads.traction_scale * np.einsum("fqa,fq->fa", faces.N, faces.dA)[..., None] * np.asarray(vector)
            for c in range(3):
                d = model.dofmap.index[faces.nodes, c]
                np.add.at(r, d.ravel(), -f[..., c].ravel())
                np.add.at(ref, d.ravel(), np.abs(f[..., c]).ravel())

    if model.film is not None and 3 in model.comps:
        faces, h, t_amb = model.film
        if h > 0:
            d = model.dofmap.index[faces.nodes, 3]
            tq = np.einsum("fqa,fa->fq", faces.N, temp[faces.nodes])
            rf = h * np.einsum("fqa,fq,fq->fa", faces.N, tq - t_amb, faces.dA)
            np.add.at(r, d.ravel(), rf.ravel())
            np.add.at(ref, d.ravel(), np.abs(rf).ravel())
            if tangent:
                kf = h * np.einsum("fqa,fqb,fq->fab", faces.N, faces.N, faces.dA)
                rows.append(np.broadcast_to(d[:, :, None], kf.shape).ravel())
                cols.append(np.broadcast_to(d[:, None, :], kf.shape).ravel())
                vals.append(kf.ravel())

    if not tangent:
        return r, ref, None
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(ndof, ndof)
    ).tocsr()
    K.sum_duplicates()
    return r, ref, K


def reduce_system(model, r, K):
    """Free-dof blocks: returns (K_ff, r_f, free indices)."""
    free = model.dofmap.free
    return K[free][:, free], r[free], free


def total_energy(model, x, loads):
    """Stored electric enthalpy minus work of dead tractions."""
    mesh = model.mesh
    u, temp, phi = model.nodal_fields(x)
    conn = mesh.elements
    e = element_energy(
        model.geometry, model.props, u[conn], temp[conn], phi[conn],
        loads.misfit_scale, model.reference_temperature, model.finite_strain,
    ).sum()
    for faces, vector in model.tractions:
        f = loads.traction_scale * np.einsum("fqa,fq->fa", faces.N, faces.dA)[..., None] * np.asarray(vector)
        e -= np.sum(f * u[faces.nodes])
    return float(e)
