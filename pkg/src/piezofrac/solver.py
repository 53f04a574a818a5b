"""Monolithic quasi-Newton solver for the strain-potential-damage system.

Each load step solves the three coupled fields at frozen damage-driving
history H: displacement equilibrium with stiffness degraded by h1(d),
charge balance with conductivity degraded by h2(d) and shifted by the
linearized piezoresistive law, and the damage equation driven by H.
The BFGS iteration is seeded with per-block sparse factorizations; the
history field is advanced between steps, which keeps the damage block
linear within a step.  After convergence a triangular polish pass
(d, then u, then phi) re-solves each linear block exactly, so reported
reactions and electrode currents balance to solver precision.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from . import elements, tensors


def h1(d, eps_reg=1e-7):
    """Stiffness degradation (1-d)^2 + eps_reg."""
    d = np.asarray(d)
    return (1.0 - d) ** 2 + eps_reg


def h2(d, k=50.0, n=6.0, eps_reg=1e-7):
    """Conductivity degradation: exponential saturation in (1-d)^n.

    Flat near d = 0 (early damage barely cuts conduction) and dropping
    to eps_reg at full damage.
    """
    if k <= 0.0 or n < 1.0:
        raise ValueError(f"degradation parameters out of range: k={k}, n={n}")
    d = np.asarray(d)
    den = -np.expm1(-k)
    return -np.expm1(-k * (1.0 - d) ** n) / den + eps_reg


class StepFailure(RuntimeError):
    """A load step did not converge (or hit unphysical state)."""


@dataclass(frozen=True)
class MaterialPoint:
    """Homogenized point data consumed by the assembly."""

    E: float
    nu: float
    Gc: float
    ell: float
    rho0: float
    lam11: float
    lam12: float
    k: float = 50.0
    n: float = 6.0
    eps_reg: float = 1e-7

    def __post_init__(self):
        if self.E <= 0.0 or not -1.0 < self.nu < 0.5:
            raise ValueError(f"bad elastic constants E={self.E}, nu={self.nu}")
        if self.Gc <= 0.0 or self.ell <= 0.0:
            raise ValueError(f"bad fracture data Gc={self.Gc}, ell={self.ell}")
        if self.rho0 <= 0.0:
            raise ValueError(f"resistivity must be positive, got {self.rho0}")
        if self.k <= 0.0 or self.n < 1.0:
            raise ValueError(f"bad degradation parameters k={self.k}, n={self.n}")
        if self.eps_reg <= 0.0:
            raise ValueError(f"regularization must be positive: {self.eps_reg}")

    @classmethod
    def from_properties(cls, props, ell, k=50.0, n=6.0, eps_reg=1e-7):
        return cls(E=props.E, nu=props.nu, Gc=props.Gc, ell=ell,
                   rho0=props.rho0, lam11=props.lam11, lam12=props.lam12,
                   k=k, n=n, eps_reg=eps_reg)

    def stiffness(self, dim):
        """Voigt stiffness: plane stress (3x3) in 2D, full 6x6 in 3D."""
        if dim == 3:
            return tensors.isotropic_stiffness(self.E, self.nu)
        f = self.E / (1.0 - self.nu ** 2)
        return f * np.array([[1.0, self.nu, 0.0],
                             [self.nu, 1.0, 0.0],
                             [0.0, 0.0, 0.5 * (1.0 - self.nu)]])


@dataclass
class NonlinearSolveConfig:
    rtol: float = 1e-6            # per-block relative residual
    atol_factor: float = 1e-10    # combined residual vs problem scale
    max_iter: int = 120
    bfgs_reset: int = 30          # secant history cap before refactorization
    max_cutbacks: int = 10        # bisection levels of the load increment
    line_search_max: int = 6
    d_drop_tol: float = 5e-2      # tolerated per-step damage decrease

    def __post_init__(self):
        if self.rtol <= 0.0 or self.atol_factor <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1 or self.bfgs_reset < 1:
            raise ValueError("iteration limits must be >= 1")


@dataclass
class FieldState:
    """Solution vector (orphan constraints applied) plus Gauss history."""

    x: np.ndarray   # ndof: displacement block, potential block, damage block
    H: np.ndarray   # (ne_active, n_gauss) history, J/m^3

    def copy(self):
        return FieldState(self.x.copy(), self.H.copy())


class CoupledSystem:
    """Vectorized residual/stiffness assembly over one mesh and material."""

    def __init__(self, mesh, mat):
        self.mesh = mesh
        self.mat = mat
        self.tables = elements.element_tables(mesh)
        self.dofmap = elements.DofMap(mesh)
        t, dm = self.tables, self.dofmap
        self.C = mat.stiffness(mesh.dim)
        self.CB = np.einsum("KL,egLA->egKA", self.C, t.B)
        self.lam44 = 0.5 * (mat.lam11 - mat.lam12)

        dim, nper = mesh.dim, t.conn.shape[1]
        self.edof_u = (t.conn[:, :, None] * dim
                       + np.arange(dim)[None, None, :]).reshape(len(t.conn), -1)
        # sparsity patterns (block-local indices)
        self.iu = np.broadcast_to(self.edof_u[:, :, None],
                                  (len(t.conn), nper * dim, nper * dim)).ravel()
        self.ju = np.broadcast_to(self.edof_u[:, None, :],
                                  (len(t.conn), nper * dim, nper * dim)).ravel()
        self.isc = np.broadcast_to(t.conn[:, :, None],
                                   (len(t.conn), nper, nper)).ravel()
        self.jsc = np.broadcast_to(t.conn[:, None, :],
                                   (len(t.conn), nper, nper)).ravel()

    # ------------------------------------------------------------ fields

    def empty_state(self):
        t = self.tables
        return FieldState(np.zeros(self.dofmap.ndof),
                          np.zeros((t.n_elems, t.n_gauss)))

    def split(self, x):
        dm = self.dofmap
        u = x[:dm.off_phi]
        phi = x[dm.off_phi:dm.off_d]
        d = x[dm.off_d:]
        return u, phi, d

    def _gauss(self, x):
        t = self.tables
        u, phi, d = self.split(x)
        eps = np.einsum("egKA,eA->egK", t.B, u[self.edof_u])
        d_el = d[t.conn]
        d_gp = np.einsum("ga,ea->eg", t.N, d_el)
        gphi = np.einsum("egai,ea->egi", t.dNdx, phi[t.conn])
        gd = np.einsum("egai,ea->egi", t.dNdx, d_el)
        return eps, d_gp, gphi, gd

    def psi0(self, eps):
        """Undegraded strain energy density at each Gauss point."""
        return 0.5 * np.einsum("egK,KL,egL->eg", eps, self.C, eps)

    def conductivity(self, eps):
        """Strained conductivity tensor per Gauss point.

        Inverse of rho0 (I + r) with r the linearized piezoresistive
        map of the local strain; in 2D only the in-plane (membrane)
        strain feeds the law and the in-plane resistivity block is
        inverted.
        """
        m = self.mat
        l11, l12, l44 = m.lam11, m.lam12, self.lam44
        if self.mesh.dim == 2:
            e1, e2, g12 = eps[..., 0], eps[..., 1], eps[..., 2]
            r00 = 1.0 + l11 * e1 + l12 * e2
            r11 = 1.0 + l11 * e2 + l12 * e1
            r01 = l44 * g12
            det = r00 * r11 - r01 * r01
            if np.any(det <= 0.0) or np.any(r00 <= 0.0):
                raise StepFailure(
                    "strained resistivity lost positive definiteness")
            sig = np.empty(eps.shape[:2] + (2, 2))
            sig[..., 0, 0] = r11
            sig[..., 1, 1] = r00
            sig[..., 0, 1] = -r01
            sig[..., 1, 0] = -r01
            return sig / (m.rho0 * det)[..., None, None]
        e1, e2, e3 = eps[..., 0], eps[..., 1], eps[..., 2]
        g23, g13, g12 = eps[..., 3], eps[..., 4], eps[..., 5]
        rho = np.empty(eps.shape[:2] + (3, 3))
        rho[..., 0, 0] = 1.0 + l11 * e1 + l12 * (e2 + e3)
        rho[..., 1, 1] = 1.0 + l11 * e2 + l12 * (e1 + e3)
        rho[..., 2, 2] = 1.0 + l11 * e3 + l12 * (e1 + e2)
        rho[..., 0, 1] = rho[..., 1, 0] = l44 * g12
        rho[..., 0, 2] = rho[..., 2, 0] = l44 * g13
        rho[..., 1, 2] = rho[..., 2, 1] = l44 * g23
        if np.any(np.linalg.det(rho) <= 0.0):
            raise StepFailure("strained resistivity lost positive definiteness")
        return np.linalg.inv(rho) / self.mat.rho0

    # ---------------------------------------------------------- assembly

    def residual(self, x, H):
        """Internal-force vector of all three blocks (full DOF layout)."""
        t, dm, m = self.tables, self.dofmap, self.mat
        eps, d_gp, gphi, gd = self._gauss(x)
        w = t.w
        h1v = h1(d_gp, m.eps_reg)
        h2v = h2(d_gp, m.k, m.n, m.eps_reg)

        sig0 = np.einsum("KL,egL->egK", self.C, eps)
        Ru_e = np.einsum("egKA,egK,eg->eA", t.B, sig0, w * h1v)

        sig_c = self.conductivity(eps)
        flux = np.einsum("egij,egj->egi", sig_c, gphi)
        Rp_e = np.einsum("egai,egi,eg->ea", t.dNdx, flux, w * h2v)

        bulk = (m.Gc / m.ell) * d_gp - 2.0 * (1.0 - d_gp) * H
        Rd_e = (np.einsum("ga,eg->ea", t.N, bulk * w)
                + m.Gc * m.ell * np.einsum("egai,egi,eg->ea", t.dNdx, gd, w))

        R = np.zeros(dm.ndof)
        R[:dm.off_phi] = np.bincount(self.edof_u.ravel(), Ru_e.ravel(),
                                     minlength=dm.off_phi)
        R[dm.off_phi:dm.off_d] = np.bincount(t.conn.ravel(), Rp_e.ravel(),
                                             minlength=dm.n_nodes)
        R[dm.off_d:] = np.bincount(t.conn.ravel(), Rd_e.ravel(),
                                   minlength=dm.n_nodes)
        if not np.isfinite(R).all():
            bad = [int(e) for e in np.flatnonzero(
                ~np.isfinite(Ru_e).all(axis=1)
                | ~np.isfinite(Rp_e).all(axis=1)
                | ~np.isfinite(Rd_e).all(axis=1))[:5]]
            raise StepFailure(f"non-finite residual from active elements {bad}")
        return R

    def block_matrices(self, x, H):
        """Sparse symmetric stiffness of each field block at state x.

        These are the exact per-block Jacobians at frozen cross-field
        values; the inter-field coupling enters the iteration through
        residual re-evaluation only.
        """
        t, dm, m = self.tables, self.dofmap, self.mat
        eps, d_gp, gphi, gd = self._gauss(x)
        w = t.w
        h1v = h1(d_gp, m.eps_reg)
        h2v = h2(d_gp, m.k, m.n, m.eps_reg)

        Ku_e = np.einsum("egKA,egKB,eg->eAB", t.B, self.CB, w * h1v)
        sig_c = self.conductivity(eps)
        Kp_e = np.einsum("egai,egij,egbj,eg->eab", t.dNdx, sig_c, t.dNdx,
                         w * h2v)
        mass = np.einsum("ga,gb,eg->eab", t.N, t.N,
                         w * (m.Gc / m.ell + 2.0 * H))
        Kd_e = mass + m.Gc * m.ell * np.einsum("egai,egbi,eg->eab",
                                               t.dNdx, t.dNdx, w)

        n = dm.n_nodes
        Ku = coo_matrix((Ku_e.ravel(), (self.iu, self.ju)),
                        shape=(dm.off_phi, dm.off_phi)).tocsc()
        Kp = coo_matrix((Kp_e.ravel(), (self.isc, self.jsc)),
                        shape=(n, n)).tocsc()
        Kd = coo_matrix((Kd_e.ravel(), (self.isc, self.jsc)),
                        shape=(n, n)).tocsc()
        return Ku, Kp, Kd


# ------------------------------------------------------------- stepping


class _BlockSeed:
    """Per-block LU factorizations of the free-free stiffness."""

    def __init__(self, system, x, H, frees):
        Ku, Kp, Kd = system.block_matrices(x, H)
        dm = system.dofmap
        fu, fp, fd = frees
        self.lu_u = splu(Ku[fu][:, fu]) if fu.size else None
        self.lu_p = splu(Kp[fp - dm.off_phi][:, fp - dm.off_phi]) \
            if fp.size else None
        self.lu_d = splu(Kd[fd - dm.off_d][:, fd - dm.off_d]) \
            if fd.size else None
        self.sizes = (fu.size, fp.size, fd.size)

    def apply(self, r):
        """Block-diagonal inverse action on a concatenated free residual."""
        nu, np_, nd = self.sizes
        out = np.empty_like(r)
        if nu:
            out[:nu] = self.lu_u.solve(r[:nu])
        if np_:
            out[nu:nu + np_] = self.lu_p.solve(r[nu:nu + np_])
        if nd:
            out[nu + np_:] = self.lu_d.solve(r[nu + np_:])
        return out


def _split_free(dofmap, free):
    fu = free[free < dofmap.off_phi]
    fp = free[(free >= dofmap.off_phi) & (free < dofmap.off_d)]
    fd = free[free >= dofmap.off_d]
    return fu, fp, fd


def _block_norms(R, frees):
    return np.array([np.linalg.norm(R[f]) if f.size else 0.0 for f in frees])


def solve_step(system, state, constraints, cfg=None, d_floor=None):
    """One monolithic BFGS solve at the current Dirichlet values.

    Returns (new FieldState with x updated, iteration count).  The
    damage history H is NOT advanced here; call `advance_history`
    between steps.  `d_floor` (previous converged damage) activates
    the irreversibility clamp.  Raises StepFailure when the iteration
    stalls or damage leaves its admissible band.
    """
    cfg = cfg or NonlinearSolveConfig()
    dm = system.dofmap
    fixed, vals, free = constraints.build()
    frees = _split_free(dm, free)

    x = state.x.copy()
    x[fixed] = vals
    H = state.H

    R = system.residual(x, H)
    norms0 = _block_norms(R, frees)
    # reference scale: total internal force including reaction rows
    scale = max(np.linalg.norm(R), norms0.sum(), 1e-300)
    ref = norms0

    def converged(norms):
        # a block already below (its share of) the combined absolute
        # target needs no relative reduction: its initial residual can
        # start at roundoff level, e.g. the potential block once a
        # crack has cut the conduction path
        esc = 0.25 * cfg.atol_factor * scale
        block_ok = (norms <= cfg.rtol * ref) | (norms <= esc)
        return block_ok.all() and norms.sum() <= cfg.atol_factor * scale

    seed = _BlockSeed(system, x, H, frees)
    S, Y = [], []
    rf = R[free]
    it = 0
    while not converged(_block_norms(R, frees)):
        if it >= cfg.max_iter:
            raise StepFailure(
                f"no convergence in {cfg.max_iter} iterations "
                f"(block residuals {_block_norms(R, frees)}, ref {ref})")
        if len(S) >= cfg.bfgs_reset:
            seed = _BlockSeed(system, x, H, frees)
            S, Y = [], []

        # two-loop recursion: inverse-BFGS action on the residual
        q = rf.copy()
        alphas = []
        for s, y, rho in reversed(S):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        z = seed.apply(q)
        for (s, y, rho), a in zip(S, reversed(alphas)):
            b = rho * (y @ z)
            z += s * (a - b)

        base = np.linalg.norm(rf)
        lam = 1.0
        for _ in range(cfg.line_search_max):
            x_try = x.copy()
            x_try[free] -= lam * z
            R_try = system.residual(x_try, H)
            if np.linalg.norm(R_try[free]) <= base * (1.0 - 1e-4 * lam) \
                    or np.linalg.norm(R_try[free]) < base:
                break
            lam *= 0.5
        else:
            # accept the smallest step; BFGS data will correct course
            x_try = x.copy()
            x_try[free] -= lam * z
            R_try = system.residual(x_try, H)

        s_vec = x_try[free] - x[free]
        y_vec = R_try[free] - rf
        sy = s_vec @ y_vec
        if sy > 1e-10 * np.linalg.norm(s_vec) * np.linalg.norm(y_vec):
            S.append((s_vec, y_vec, 1.0 / sy))
            Y.append(None)
        x, R, rf = x_try, R_try, R_try[free]
        it += 1

    x = _polish(system, x, H, frees, cfg, d_floor)
    new = FieldState(x, H.copy())
    return new, it


def _polish(system, x, H, frees, cfg, d_floor):
    """Exact triangular re-solve: damage, then displacement, then potential.

    At frozen H the step problem is block lower triangular (d depends
    only on H, u on d, phi on u and d), so one LU pass per block lands
    on the exact step solution; electrode currents then balance to
    factorization precision.  Damage bounds are clamped between the
    damage and displacement solves so the final fields stay mutually
    consistent.
    """
    dm = system.dofmap
    fu, fp, fd = frees
    x = x.copy()
    for f, off in ((fd, dm.off_d), (fu, 0), (fp, dm.off_phi)):
        if f.size:
            Ku, Kp, Kd = system.block_matrices(x, H)
            K = {dm.off_d: Kd, 0: Ku, dm.off_phi: Kp}[off]
            R = system.residual(x, H)
            x[f] -= splu(K[f - off][:, f - off]).solve(R[f])
        if off == dm.off_d:
            _apply_damage_bounds(x[dm.off_d:], d_floor, cfg)
    return x


def _apply_damage_bounds(d, d_floor, cfg):
    """Project d onto its admissible band in place.

    d <= 1 is a bound constraint: the linear damage solve overshoots
    near saturated sharp-gradient bands (consistent-mass Gibbs effect)
    and the projection realizes the active set, so overshoot is never
    a failure.  A decrease below the previous step beyond d_drop_tol,
    however, signals a diverged solve and aborts; smaller dips are the
    same discrete oscillation and are projected onto the floor.
    """
    if d.size == 0:
        return
    np.clip(d, 0.0, 1.0, out=d)
    if d_floor is not None:
        drop = np.max(d_floor - d)
        if drop > cfg.d_drop_tol:
            raise StepFailure(f"damage decreased by {drop:.3e} in one step")
        np.maximum(d, d_floor, out=d)


def advance_history(system, state):
    """Irreversible history update H <- max(H, psi0) from the current strain."""
    eps, _, _, _ = system._gauss(state.x)
    np.maximum(state.H, system.psi0(eps), out=state.H)
    return state


@dataclass
class StepRecord:
    """Per-step curve data of a displacement-controlled run."""

    step: int
    u_applied: float
    force: float
    current: float
    resistance: float
    rel_resistance: float
    max_d: float
    charge_mismatch: float
    iterations: int


@dataclass
class RunResult:
    records: list
    state: FieldState
    aborted: bool = False
    abort_reason: str = ""

    def curve(self, name):
        return np.array([getattr(r, name) for r in self.records])


def run_load_program(system, constraints, load_groups, load_values,
                     drive_group, ground_group, voltage,
                     react_dofs=None, cfg=None, observer=None,
                     initial=None):
    """Displacement-controlled stepping with curve extraction.

    load_groups: constraint-group names scaled by each value of
    load_values (monotone program, starting point 0 is implied).
    drive/ground groups name the electrode constraint groups; the
    reaction force is summed over react_dofs (defaults to the first
    load group's DOFs).  An observer(step, record, state) callback can
    dump fields.  On persistent non-convergence the run aborts and the
    last converged state is returned.
    """
    cfg = cfg or NonlinearSolveConfig()
    state = (initial or system.empty_state()).copy()
    if react_dofs is None:
        react_dofs = constraints.group_dofs(load_groups[0])
    drive_dofs = constraints.group_dofs(drive_group)
    ground_dofs = constraints.group_dofs(ground_group)

    records = []
    d_prev = state.x[system.dofmap.off_d:].copy()

    def solve_at(value, step_index):
        nonlocal state, d_prev
        for g in load_groups:
            constraints.set_value(g, value)
        new, its = solve_step(system, state, constraints, cfg,
                              d_floor=d_prev)
        state = new
        d_prev = state.x[system.dofmap.off_d:].copy()
        R = system.residual(state.x, state.H)
        rec = _make_record(system, state, R, value, step_index,
                           react_dofs, drive_dofs, ground_dofs, voltage, its,
                           records[0].resistance if records else None)
        advance_history(system, state)
        return rec

    # unstrained baseline (R0) before the program
    try:
        rec = solve_at(0.0, 0)
    except StepFailure as err:
        return RunResult([], state, aborted=True,
                         abort_reason=f"baseline solve failed: {err}")
    records.append(rec)
    if observer:
        observer(0, rec, state)

    for i, target in enumerate(load_values, start=1):
        prev = records[-1].u_applied
        stack = [float(target)]
        depth = 0
        while stack:
            value = stack[-1]
            saved = state.copy()
            saved_d = d_prev.copy()
            try:
                rec = solve_at(value, i)
            except StepFailure as err:
                state, d_prev = saved, saved_d
                depth += 1
                if depth > cfg.max_cutbacks:
                    return RunResult(records, state, aborted=True,
                                     abort_reason=str(err))
                stack.append(0.5 * (prev + value))
                continue
            stack.pop()
            prev = value
        records.append(rec)
        if observer:
            observer(i, rec, state)
    return RunResult(records, state)


def _make_record(system, state, R, value, step, react_dofs,
                 drive_dofs, ground_dofs, voltage, its, r0):
    dm = system.dofmap
    phi_rows = R[dm.off_phi:dm.off_d]
    i_drive = float(np.sum(phi_rows[np.asarray(drive_dofs) - dm.off_phi]))
    i_ground = float(np.sum(phi_rows[np.asarray(ground_dofs) - dm.off_phi]))
    current = max(abs(i_drive), abs(i_ground))
    mismatch = abs(i_drive + i_ground) / max(current, 1e-300)
    force = float(np.sum(R[np.asarray(react_dofs)]))
    resistance = abs(voltage) / current if current > 0.0 else math.inf
    if r0 is None or r0 == 0.0 or not math.isfinite(r0):
        rel = 0.0
    elif not math.isfinite(resistance):
        rel = math.inf
    else:
        rel = (resistance - r0) / r0
    d = state.x[dm.off_d:]
    return StepRecord(step=step, u_applied=float(value), force=force,
                      current=current, resistance=resistance,
                      rel_resistance=rel, max_d=float(d.max()) if d.size else 0.0,
                      charge_mismatch=mismatch, iterations=its)


def seed_history(system, element_ids, value):
    """Initial-condition crack: raise H on the given active elements.

    Returns the H array shaped for FieldState; `value` is typically
    hundreds of Gc/(2 ell) so the damage equation saturates d near 1.
    """
    t = system.tables
    H = np.zeros((t.n_elems, t.n_gauss))
    if len(element_ids):
        active_ids = np.flatnonzero(system.mesh.active)
        lookup = -np.ones(system.mesh.active.size, dtype=np.int64)
        lookup[active_ids] = np.arange(active_ids.size)
        rows = lookup[np.asarray(element_ids, dtype=np.int64)]
        if np.any(rows < 0):
            raise ValueError("history seed on an inactive element")
        H[rows] = value
    return H
