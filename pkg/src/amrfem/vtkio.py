"""Legacy-ASCII VTK export of mesh snapshots for offline visualisation."""
from __future__ import annotations

import numpy as np

from .fem import NodalField
from .mesh import MeshTopology, enumerate_nodes

__all__ = ["write_vtk"]


def write_vtk(path, mesh: MeshTopology, p: int, point_fields: dict[str, NodalField]):
    """Write an unstructured-grid snapshot (quads in 2D, lines in 1D).

    Cells reference the corner nodes only; for quadratic fields the edge and
    centre nodes still appear in the point list with their values, which is
    enough for point-based rendering. Output is for inspection, not
    bit-exact archival.
    """
    nn = enumerate_nodes(mesh, p)
    coords = nn.node_coords
    n_nodes = len(coords)
    dim = mesh.dim
    if dim == 1:
        corner_local = [0, p]
        cell_type = 3  # VTK_LINE
    else:
        corner_local = [0, p, (p + 1) * p + p, (p + 1) * p]  # ccw quad corners
        cell_type = 9  # VTK_QUAD
    cells = nn.elem_nodes[:, corner_local]

    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("amrfem snapshot\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {n_nodes} double\n")
        for row in coords:
            x = row[0]
            y = row[1] if dim == 2 else 0.0
            fh.write(f"{x:.12g} {y:.12g} 0\n")
        n_cells = mesh.n_leaves
        n_per = len(corner_local)
        fh.write(f"CELLS {n_cells} {n_cells * (n_per + 1)}\n")
        for row in cells:
            fh.write(f"{n_per} " + " ".join(str(int(v)) for v in row) + "\n")
        fh.write(f"CELL_TYPES {n_cells}\n")
        for _ in range(n_cells):
            fh.write(f"{cell_type}\n")
        fh.write(f"CELL_DATA {n_cells}\n")
        fh.write("SCALARS level int 1\nLOOKUP_TABLE default\n")
        for lv in mesh.levels:
            fh.write(f"{int(lv)}\n")
        if point_fields:
            fh.write(f"POINT_DATA {n_nodes}\n")
            for name, field in point_fields.items():
                vals = field.node_values()
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for v in vals:
                    fh.write(f"{v:.12g}\n")
    return path
