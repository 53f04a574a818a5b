"""Structured quad/hex meshing with holes, slits, and random defects.

Grids are axis-aligned; geometric features are realized by element
deactivation (centroid tests), which keeps Monte Carlo studies free of
external meshing.  Named node sets mark the box faces for boundary
conditions.  A plain-text format and a VTK legacy writer round out the
I/O.
"""

import math
from dataclasses import dataclass, field

import numpy as np

_FACE_NAMES = (("xmin", "xmax"), ("ymin", "ymax"), ("zmin", "zmax"))


@dataclass
class Mesh:
    """Structured mesh with an element activity mask.

    nodes: (n_nodes, dim) coordinates in m.
    elems: (n_elems, 4 or 8) connectivity, counter-clockwise quads or
        standard bricks; inactive elements stay in the table.
    active: (n_elems,) bool mask (holes, slits, exterior cut-outs).
    node_sets: named node index arrays (box faces by default).
    thickness: out-of-plane thickness, m (2D only; 1.0 in 3D).
    """

    nodes: np.ndarray
    elems: np.ndarray
    active: np.ndarray
    node_sets: dict = field(default_factory=dict)
    thickness: float = 1.0

    @property
    def dim(self):
        return self.nodes.shape[1]

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_active(self):
        return int(np.count_nonzero(self.active))

    def centroids(self):
        return self.nodes[self.elems].mean(axis=1)

    def active_nodes(self):
        """Boolean mask of nodes referenced by at least one active element."""
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[np.unique(self.elems[self.active])] = True
        return mask

    def element_size(self):
        """Edge lengths (per axis) of the first element."""
        e = self.elems[0]
        if self.dim == 2:
            return np.array([abs(self.nodes[e[1], 0] - self.nodes[e[0], 0]),
                             abs(self.nodes[e[3], 1] - self.nodes[e[0], 1])])
        return np.array([abs(self.nodes[e[1], 0] - self.nodes[e[0], 0]),
                         abs(self.nodes[e[3], 1] - self.nodes[e[0], 1]),
                         abs(self.nodes[e[4], 2] - self.nodes[e[0], 2])])

    def set_nodes(self, name):
        try:
            return self.node_sets[name]
        except KeyError:
            raise KeyError(f"mesh has no node set named '{name}'; "
                           f"available: {sorted(self.node_sets)}") from None


def structured_mesh(lengths, divisions, thickness=1.0, origin=None):
    """Axis-aligned box grid of quad4 (2D) or hex8 (3D) elements.

    lengths and divisions are per-axis; node sets 'xmin', 'xmax', ...
    mark the box faces.
    """
    lengths = np.asarray(lengths, dtype=float)
    divisions = np.asarray(divisions, dtype=int)
    dim = lengths.size
    if dim not in (2, 3) or divisions.size != dim:
        raise ValueError(f"need 2 or 3 matched lengths/divisions, got "
                         f"{lengths.size}/{divisions.size}")
    if np.any(lengths <= 0.0) or np.any(divisions < 1):
        raise ValueError(f"bad domain {lengths} or divisions {divisions}")
    if thickness <= 0.0:
        raise ValueError(f"thickness must be positive, got {thickness}")
    origin = np.zeros(dim) if origin is None else np.asarray(origin, float)

    axes = [origin[i] + np.linspace(0.0, lengths[i], divisions[i] + 1)
            for i in range(dim)]
    if dim == 2:
        nx, ny = divisions
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        nodes = np.column_stack([X.ravel(), Y.ravel()])

        def nid(i, j):
            return i * (ny + 1) + j

        I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        elems = np.column_stack([
            nid(I, J).ravel(), nid(I + 1, J).ravel(),
            nid(I + 1, J + 1).ravel(), nid(I, J + 1).ravel()])
    else:
        nx, ny, nz = divisions
        X, Y, Z = np.meshgrid(axes[0], axes[1], axes[2], indexing="ij")
        nodes = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

        def nid(i, j, k):
            return (i * (ny + 1) + j) * (nz + 1) + k

        I, J, K = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz),
                              indexing="ij")
        elems = np.column_stack([
            nid(I, J, K).ravel(), nid(I + 1, J, K).ravel(),
            nid(I + 1, J + 1, K).ravel(), nid(I, J + 1, K).ravel(),
            nid(I, J, K + 1).ravel(), nid(I + 1, J, K + 1).ravel(),
            nid(I + 1, J + 1, K + 1).ravel(), nid(I, J + 1, K + 1).ravel()])

    sets = {}
    for i in range(dim):
        lo, hi = _FACE_NAMES[i]
        tol = 1e-9 * max(lengths)
        sets[lo] = np.flatnonzero(np.abs(nodes[:, i] - origin[i]) < tol)
        sets[hi] = np.flatnonzero(
            np.abs(nodes[:, i] - origin[i] - lengths[i]) < tol)
    return Mesh(nodes=nodes, elems=elems.astype(np.int64),
                active=np.ones(len(elems), dtype=bool),
                node_sets=sets, thickness=thickness if dim == 2 else 1.0)


def _check_resolved(mesh, size, what):
    h = float(np.max(mesh.element_size()))
    if size < 2.0 * h:
        raise ValueError(
            f"{what} of size {size:.4g} m is unresolvable on this grid "
            f"(needs at least 2h = {2.0 * h:.4g} m)")


def punch_hole(mesh, center, radius):
    """Deactivate elements whose centroid falls inside a circular hole."""
    if radius <= 0.0:
        raise ValueError(f"hole radius must be positive, got {radius}")
    _check_resolved(mesh, 2.0 * radius, "hole")
    c = np.asarray(center, dtype=float)
    cen = mesh.centroids()
    inside = np.linalg.norm(cen[:, :c.size] - c, axis=1) < radius
    mesh.active &= ~inside
    return int(np.count_nonzero(inside))


def punch_outside_cylinder(mesh, center_xy, radius):
    """Deactivate elements whose centroid lies outside a circle in x-y.

    Carves a cylindrical specimen (axis along z in 3D, the full plate
    in 2D) out of the box grid.
    """
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    c = np.asarray(center_xy, dtype=float)
    cen = mesh.centroids()
    outside = np.linalg.norm(cen[:, :2] - c, axis=1) > radius
    mesh.active &= ~outside
    return int(np.count_nonzero(outside))


def slit_elements(mesh, start, angle, length):
    """Element ids whose centroid lies within half a cell of a segment.

    The stair-cased element band realizes a zero-width slit from
    `start` at `angle` (radians, from the +x axis) over `length`.
    """
    if length <= 0.0:
        raise ValueError(f"slit length must be positive, got {length}")
    _check_resolved(mesh, length, "slit")
    p0 = np.asarray(start, dtype=float)
    t = np.array([math.cos(angle), math.sin(angle)])
    half = 0.5 * float(np.max(mesh.element_size()[:2]))
    # a grid-aligned segment on a node line ties with both neighbouring
    # centroid rows at exactly half a cell; a tiny normal offset breaks
    # the tie to one deterministic side so the band stays one element
    # thick for every angle
    p_eff = p0[:2] + np.array([-t[1], t[0]]) * (1e-6 * half)
    cen = mesh.centroids()[:, :2]
    rel = cen - p_eff
    s = np.clip(rel @ t, 0.0, length)
    dist = np.linalg.norm(rel - s[:, None] * t, axis=1)
    return np.flatnonzero((dist < half) & mesh.active)


def cut_slit(mesh, start, angle, length):
    """Deactivate a stair-cased element band along a slit segment."""
    ids = slit_elements(mesh, start, angle, length)
    mesh.active[ids] = False
    return ids


def random_defects(rng, region_min, region_max, target_area,
                   mean_radius=2.0e-3, std_radius=1.2e-3,
                   min_radius=0.25e-3, max_tries=100000):
    """Sample circular defects until their cumulative area meets a target.

    Centers are uniform over the region; radii are normal with the
    given mean/std, truncated from below.  Returns a list of
    (center, radius) pairs; deterministic for a seeded generator.
    """
    lo = np.asarray(region_min, dtype=float)
    hi = np.asarray(region_max, dtype=float)
    if np.any(hi <= lo):
        raise ValueError(f"empty sampling region {lo} .. {hi}")
    if target_area < 0.0:
        raise ValueError(f"target area must be >= 0, got {target_area}")
    holes = []
    area = 0.0
    tries = 0
    while area < target_area:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(
                f"defect sampling did not reach the target area "
                f"{target_area:.4g} m^2 within {max_tries} draws")
        r = rng.normal(mean_radius, std_radius)
        if r < min_radius:
            continue
        c = lo + rng.random(lo.size) * (hi - lo)
        holes.append((c, float(r)))
        area += math.pi * r * r
    return holes


def apply_defects(mesh, holes):
    """Punch a list of (center, radius) defects, skipping unresolvable ones.

    Sub-cell defects are dropped (they would deactivate nothing useful);
    the number actually applied is returned.
    """
    h = float(np.max(mesh.element_size()))
    applied = 0
    for c, r in holes:
        if 2.0 * r < 2.0 * h:
            continue
        punch_hole(mesh, c, r)
        applied += 1
    return applied


# ----------------------------------------------------------------- I/O


def save_mesh(mesh, path):
    """Plain-text mesh: node table, element table with activity, sets."""
    with open(path, "w") as f:
        f.write(f"mesh dim {mesh.dim} thickness {float(mesh.thickness)!r}\n")
        f.write(f"nodes {mesh.n_nodes}\n")
        for row in mesh.nodes:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")
        f.write(f"elements {len(mesh.elems)} {mesh.elems.shape[1]}\n")
        for conn, act in zip(mesh.elems, mesh.active):
            f.write(" ".join(str(v) for v in conn) + f" {int(act)}\n")
        f.write(f"sets {len(mesh.node_sets)}\n")
        for name in sorted(mesh.node_sets):
            ids = mesh.node_sets[name]
            f.write(f"{name} {len(ids)}\n")
            f.write(" ".join(str(v) for v in ids) + "\n")


def load_mesh(path):
    with open(path) as f:
        tok = f.readline().split()
        if len(tok) != 5 or tok[0] != "mesh":
            raise ValueError(f"{path}: not a mesh file (bad header)")
        dim, thickness = int(tok[2]), float(tok[4])
        tok = f.readline().split()
        n_nodes = int(tok[1])
        nodes = np.array([[float(v) for v in f.readline().split()]
                          for _ in range(n_nodes)])
        tok = f.readline().split()
        n_el, nper = int(tok[1]), int(tok[2])
        table = np.array([[int(v) for v in f.readline().split()]
                          for _ in range(n_el)], dtype=np.int64)
        elems, active = table[:, :nper], table[:, nper].astype(bool)
        tok = f.readline().split()
        sets = {}
        for _ in range(int(tok[1])):
            name, count = f.readline().split()
            line = f.readline().split()
            if len(line) != int(count):
                raise ValueError(f"{path}: set '{name}' length mismatch")
            sets[name] = np.array([int(v) for v in line], dtype=np.int64)
    if nodes.shape != (n_nodes, dim):
        raise ValueError(f"{path}: node table shape mismatch")
    return Mesh(nodes=nodes, elems=elems, active=active,
                node_sets=sets, thickness=thickness)


_VTK_CELL = {4: 9, 8: 12}  # quad, hexahedron


def write_vtk(path, mesh, point_data=None, cell_data=None):
    """VTK legacy ASCII unstructured grid of the active elements.

    point_data: {name: (n_nodes,) or (n_nodes, k) array} written as
    SCALARS/VECTORS; cell_data likewise over active elements.
    """
    elems = mesh.elems[mesh.active]
    nodes = mesh.nodes
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write("structured composite specimen\n")
        f.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {len(nodes)} double\n")
        pad = np.zeros((len(nodes), 3))
        pad[:, :mesh.dim] = nodes
        for row in pad:
            f.write(f"{row[0]:.9g} {row[1]:.9g} {row[2]:.9g}\n")
        nper = elems.shape[1]
        f.write(f"CELLS {len(elems)} {len(elems) * (nper + 1)}\n")
        for conn in elems:
            f.write(str(nper) + " " + " ".join(str(v) for v in conn) + "\n")
        f.write(f"CELL_TYPES {len(elems)}\n")
        f.write("\n".join([str(_VTK_CELL[nper])] * len(elems)) + "\n")

        def write_arrays(data, n):
            for name, arr in data.items():
                arr = np.asarray(arr, dtype=float)
                if arr.ndim == 1:
                    f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    f.write("\n".join(f"{v:.9g}" for v in arr) + "\n")
                else:
                    f.write(f"VECTORS {name} double\n")
                    pad = np.zeros((n, 3))
                    pad[:, :arr.shape[1]] = arr
                    for row in pad:
                        f.write(f"{row[0]:.9g} {row[1]:.9g} {row[2]:.9g}\n")

        if point_data:
            f.write(f"POINT_DATA {len(nodes)}\n")
            write_arrays(point_data, len(nodes))
        if cell_data:
            f.write(f"CELL_DATA {len(elems)}\n")
            write_arrays(cell_data, len(elems))
