"""Legacy ASCII VTK export of meshes and converged fields.

Cells are written as VTK_QUADRATIC_HEXAHEDRON (type 25), whose node order
matches the mesh connectivity.
"""

import numpy as np

VTK_QUADRATIC_HEXAHEDRON = 25


def _block(fh, values, per_line=6):
    flat = np.asarray(values, dtype=float).ravel()
    for s in range(0, len(flat), per_line):
        fh.write(" ".join(f"{v:.10e}" for v in flat[s:s + per_line]) + "\n")


def write_vtk(path, mesh, point_data=None, cell_data=None, title="mems3d"):
    """Write an unstructured grid.

    ``point_data`` / ``cell_data`` map names to arrays of shape (n,) for
    scalars or (n, 3) for vectors.
    """
    n, ne = mesh.n_nodes, mesh.n_elements
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title.replace("\n", " ")[:255] + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {n} double\n")
        _block(fh, mesh.node_coords, 3)
        fh.write(f"CELLS {ne} {ne * 21}\n")
        for conn in mesh.elements:
            fh.write("20 " + " ".join(str(int(i)) for i in conn) + "\n")
        fh.write(f"CELL_TYPES {ne}\n")
        fh.write("\n".join([str(VTK_QUADRATIC_HEXAHEDRON)] * ne) + "\n")
        for header, count, data in (("POINT_DATA", n, point_data), ("CELL_DATA", ne, cell_data)):
            if not data:
                continue
            fh.write(f"{header} {count}\n")
            for name, values in data.items():
                arr = np.asarray(values, dtype=float)
                if arr.shape == (count,):
                    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    _block(fh, arr)
                elif arr.shape == (count, 3):
                    fh.write(f"VECTORS {name} double\n")
                    _block(fh, arr, 3)
                else:
                    raise ValueError(f"{name}: expected shape ({count},) or ({count}, 3), got {arr.shape}")


def write_fields_vtk(path, model, state, title="mems3d"):
    """Displacement, temperature and potential at nodes; layer and von Mises stress per cell."""
    from .models import centroid_von_mises

    u, temp, phi = model.nodal_fields(state.x)
    write_vtk(
        path, model.mesh,
        point_data={"displacement": u, "temperature": temp, "potential": phi},
        cell_data={"layer": model.mesh.element_layer, "von_mises": centroid_von_mises(model, state)},
        title=title,
    )
