"""20-node serendipity hexahedron: basis functions and Gauss rules.

Node ordering follows the VTK quadratic hexahedron (cell type 25): eight
corners, then the mid-edge nodes of the bottom face, the top face and the
four vertical edges.
"""

import numpy as np

NODE_REF_COORDS = np.array([
    [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
    [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
    [0, -1, -1], [1, 0, -1], [0, 1, -1], [-1, 0, -1],
    [0, -1, 1], [1, 0, 1], [0, 1, 1], [-1, 0, 1],
    [-1, -1, 0], [1, -1, 0], [1, 1, 0], [-1, 1, 0],
], dtype=float)

N_NODES = 20

# local faces: (axis, side); face k contains the nodes whose reference
# coordinate along ``axis`` equals ``side``
FACES = ((0, -1.0), (0, 1.0), (1, -1.0), (1, 1.0), (2, -1.0), (2, 1.0))
FACE_NODES = tuple(
    tuple(int(i) for i in np.flatnonzero(NODE_REF_COORDS[:, axis] == side)) for axis, side in FACES
)


def shape_functions(points):
    """Values (m, 20) and reference gradients (m, 20, 3) at points (m, 3)."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    xi = p[:, None, :]  # (m, 1, 3)
    c = NODE_REF_COORDS[None, :, :]  # (1, 20, 3)
    lin = 1.0 + c * xi  # (m, 20, 3)
    n = np.empty((len(p), N_NODES))
    dn = np.empty((len(p), N_NODES, 3))

    corner = np.all(NODE_REF_COORDS != 0, axis=1)
    # corners: 1/8 prod(1 + c x) (sum(c x) - 2)
    lc = lin[:, corner]
    cc = c[:, corner]
    prod = lc.prod(axis=2)
    s = (cc * xi).sum(axis=2) - 2.0
    n[:, corner] = prod * s / 8.0
    for d in range(3):
        others = [k for k in range(3) if k != d]
        po = lc[:, :, others[0]] * lc[:, :, others[1]]
        dn[:, corner, d] = cc[:, :, d] * (po * s + prod) / 8.0

    # mid-edge nodes: 1/4 (1 - x_d^2) prod_{k != d} (1 + c_k x_k), d = zero axis
    for d in range(3):
        mask = NODE_REF_COORDS[:, d] == 0
        others = [k for k in range(3) if k != d]
        lm = lin[:, mask]
        q = 1.0 - p[:, d] ** 2
        a, b = lm[:, :, others[0]], lm[:, :, others[1]]
        ca, cb = c[:, mask, others[0]], c[:, mask, others[1]]
        n[:, mask] = q[:, None] * a * b / 4.0
        dn[:, mask, d] = -2.0 * p[:, d][:, None] * a * b / 4.0
        dn[:, mask, others[0]] = q[:, None] * ca * b / 4.0
        dn[:, mask, others[1]] = q[:, None] * a * cb / 4.0
    return n, dn


def shape_eval(local_coords):
    """Basis values (20,) and reference gradients (20, 3) at one point."""
    n, dn = shape_functions(np.asarray(local_coords, dtype=float)[None, :])
    return n[0], dn[0]


def gauss_legendre(order):
    return np.polynomial.legendre.leggauss(order)


def hex_rule(order=3):
    """Tensor Gauss points (order^3, 3) and weights on [-1, 1]^3."""
    x, w = gauss_legendre(order)
    g = np.array(np.meshgrid(x, x, x, indexing="ij")).reshape(3, -1).T
    wt = np.einsum("i,j,k->ijk", w, w, w).ravel()
    return g, wt


def face_rule(face, order=3):
    """Gauss points (order^2, 3) on one local face and the 2-D weights.

    Also returns the indices of the two in-face reference axes.
    """
    axis, side = FACES[face]
    t = [k for k in range(3) if k != axis]
    x, w = gauss_legendre(order)
    a, b = np.meshgrid(x, x, indexing="ij")
    pts = np.empty((order * order, 3))
    pts[:, axis] = side
    pts[:, t[0]] = a.ravel()
    pts[:, t[1]] = b.ravel()
    return pts, np.outer(w, w).ravel(), t
