"""Shape functions, quadrature tables, and DOF bookkeeping.

Bilinear quads and trilinear bricks with full Gauss integration.  All
per-element arrays are built vectorized over the active elements once
per mesh; assembly then reduces to einsum contractions.
"""

from dataclasses import dataclass

import numpy as np

_G = 1.0 / np.sqrt(3.0)


def _reference(dim):
    """Reference-element corner signs, Gauss points, and weights."""
    if dim == 2:
        corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    else:
        corners = np.array([[-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
                            [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]],
                           dtype=float)
    gp = corners * _G  # 2x2(x2) full integration shares the corner layout
    gw = np.ones(len(gp))
    return corners, gp, gw


def shape_functions(dim, xi):
    """N and dN/dxi of the linear quad/brick at local coordinates xi."""
    corners, _, _ = _reference(dim)
    xi = np.asarray(xi, dtype=float)
    terms = 1.0 + corners * xi  # (nper, dim)
    N = terms.prod(axis=1) / 2.0 ** dim
    dN = np.empty_like(corners)
    for j in range(dim):
        others = np.delete(terms, j, axis=1).prod(axis=1)
        dN[:, j] = corners[:, j] * others / 2.0 ** dim
    return N, dN


class JacobianError(ValueError):
    """Raised when an element maps with non-positive volume."""


@dataclass
class ElementTables:
    """Precomputed shape data of all active elements at all Gauss points.

    conn: (ne, nper) node ids of active elements.
    N: (ng, nper) shape values (reference, element independent).
    dNdx: (ne, ng, nper, dim) physical gradients.
    B: (ne, ng, nstr, nper*dim) strain-displacement matrices in Voigt
        order (11, 22, [33,] shears with engineering factors).
    w: (ne, ng) integration weights detJ * gauss * thickness.
    """

    conn: np.ndarray
    N: np.ndarray
    dNdx: np.ndarray
    B: np.ndarray
    w: np.ndarray

    @property
    def n_elems(self):
        return self.conn.shape[0]

    @property
    def n_gauss(self):
        return self.N.shape[0]


def element_tables(mesh):
    """Vectorized shape-function tables over the active elements."""
    dim = mesh.dim
    conn = mesh.elems[mesh.active]
    coords = mesh.nodes[conn]  # (ne, nper, dim)
    _, gp, gw = _reference(dim)
    ng, nper = len(gp), conn.shape[1]

    N = np.empty((ng, nper))
    dN_ref = np.empty((ng, nper, dim))
    for g, xi in enumerate(gp):
        N[g], dN_ref[g] = shape_functions(dim, xi)

    # J[e,g,i,j] = d x_i / d xi_j
    J = np.einsum("eai,gaj->egij", coords, dN_ref)
    detJ = np.linalg.det(J)
    bad = np.argwhere(detJ <= 0.0)
    if bad.size:
        e, g = bad[0]
        active_ids = np.flatnonzero(mesh.active)
        raise JacobianError(
            f"element {active_ids[e]} has non-positive Jacobian "
            f"{detJ[e, g]:.3e} at Gauss point {g}")
    Jinv = np.linalg.inv(J)
    dNdx = np.einsum("gaj,egji->egai", dN_ref, Jinv)

    thickness = mesh.thickness if dim == 2 else 1.0
    w = detJ * gw[None, :] * thickness

    nstr = 3 if dim == 2 else 6
    B = np.zeros((conn.shape[0], ng, nstr, nper * dim))
    ax = [np.s_[..., 0], np.s_[..., 1], np.s_[..., 2]]
    if dim == 2:
        B[:, :, 0, 0::2] = dNdx[ax[0]]
        B[:, :, 1, 1::2] = dNdx[ax[1]]
        B[:, :, 2, 0::2] = dNdx[ax[1]]  # engineering shear gamma_12
        B[:, :, 2, 1::2] = dNdx[ax[0]]
    else:
        B[:, :, 0, 0::3] = dNdx[ax[0]]
        B[:, :, 1, 1::3] = dNdx[ax[1]]
        B[:, :, 2, 2::3] = dNdx[ax[2]]
        B[:, :, 3, 1::3] = dNdx[ax[2]]  # gamma_23
        B[:, :, 3, 2::3] = dNdx[ax[1]]
        B[:, :, 4, 0::3] = dNdx[ax[2]]  # gamma_13
        B[:, :, 4, 2::3] = dNdx[ax[0]]
        B[:, :, 5, 0::3] = dNdx[ax[1]]  # gamma_12
        B[:, :, 5, 1::3] = dNdx[ax[0]]
    return ElementTables(conn=conn, N=N, dNdx=dNdx, B=B, w=w)


class DofMap:
    """Global DOF layout: displacement block, potential block, damage block.

    DOFs are grouped by field so the solver can slice residuals and
    factor per-block operators directly.  Nodes not referenced by any
    active element carry no unknowns.
    """

    def __init__(self, mesh):
        self.dim = mesh.dim
        self.n_nodes = mesh.n_nodes
        n = mesh.n_nodes
        self.n_u = n * self.dim
        self.off_phi = self.n_u
        self.off_d = self.n_u + n
        self.ndof = self.n_u + 2 * n
        self.active_node = mesh.active_nodes()
        act = np.repeat(self.active_node, self.dim)
        self.active_dof = np.concatenate(
            [act, self.active_node, self.active_node])

    def u_dofs(self, nodes, component=None):
        nodes = np.asarray(nodes, dtype=np.int64)
        if component is None:
            return (nodes[:, None] * self.dim
                    + np.arange(self.dim)[None, :]).ravel()
        return nodes * self.dim + component

    def phi_dofs(self, nodes):
        return self.off_phi + np.asarray(nodes, dtype=np.int64)

    def d_dofs(self, nodes):
        return self.off_d + np.asarray(nodes, dtype=np.int64)

    def block(self, name):
        """Global index range of one field block."""
        return {"u": (0, self.off_phi),
                "phi": (self.off_phi, self.off_d),
                "d": (self.off_d, self.ndof)}[name]


class Constraints:
    """Dirichlet table: fixed DOF ids with prescribed values.

    Inactive-node DOFs are always pinned to zero.  Values can be
    rescaled per load step through `set_value` on named groups.
    """

    def __init__(self, dofmap):
        self.dofmap = dofmap
        self._groups = {}
        dead = np.flatnonzero(~dofmap.active_dof)
        if dead.size:
            self._groups["_inactive"] = (dead, np.zeros(dead.size), 0.0)

    def fix(self, name, dofs, pattern=1.0, value=0.0):
        """Register a named group: prescribed = pattern * value."""
        dofs = np.asarray(dofs, dtype=np.int64)
        pattern = np.broadcast_to(np.asarray(pattern, float), dofs.shape)
        if name in self._groups:
            raise ValueError(f"constraint group '{name}' already defined")
        self._groups[name] = (dofs, pattern.copy(), float(value))

    def set_value(self, name, value):
        dofs, pattern, _ = self._groups[name]
        self._groups[name] = (dofs, pattern, float(value))

    def group_dofs(self, name):
        return self._groups[name][0]

    def build(self):
        """(fixed_dofs, fixed_values, free_dofs) with duplicates rejected."""
        if not self._groups:
            fixed = np.empty(0, dtype=np.int64)
            vals = np.empty(0)
        else:
            parts = [(d, p * v) for d, p, v in self._groups.values()]
            fixed = np.concatenate([p[0] for p in parts])
            vals = np.concatenate([p[1] for p in parts])
        order = np.argsort(fixed, kind="stable")
        fixed, vals = fixed[order], vals[order]
        dup = np.flatnonzero(np.diff(fixed) == 0)
        if dup.size:
            # overlapping groups must agree (e.g. a corner pinned twice)
            if not np.allclose(vals[dup], vals[dup + 1]):
                raise ValueError(
                    f"conflicting constraints on dof {fixed[dup[0]]}")
            keep = np.ones(fixed.size, dtype=bool)
            keep[dup] = False
            fixed, vals = fixed[keep], vals[keep]
        free = np.setdiff1d(np.arange(self.dofmap.ndof), fixed,
                            assume_unique=False)
        return fixed, vals, free
