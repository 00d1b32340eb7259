"""Linear static analysis of 3D beam/truss line models.

Elements are 2-node Euler-Bernoulli space beams (cubic bending, linear axial
and torsion interpolation, no shear deformation) and axial-only trusses.
Nodal DOFs are ordered (ux, uy, uz, rx, ry, rz); element vectors stack end A
then end B.

Local axes: x runs along the element.  By default local z is the global Z
projected perpendicular to the element axis; members within 1e-6 of vertical
fall back to global X as reference.  Rectangle sections may override the rule
through their reference direction, which then pins the named local axis.

Self-weight enters as a uniform line load rho*g*A with consistent equivalent
nodal forces; the fixed-end actions are subtracted again during force
recovery.  Rigid links are eliminated ahead of assembly by expressing slave
DOFs in terms of their master (the transformation keeps the matrix symmetric
positive definite), and rotational DOFs of points connected only to trusses
are suppressed automatically.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import (
    BEAM_LINE,
    DOF_NAMES,
    KG_MM_S2_TO_N,
    Rectangle,
    StructuralModel,
    TRUSS_LINE,
    validate,
)
from .topology import check_support_reachability, resolve_link_offset

_VERTICAL_TOL = 1e-6
_DIRECT_RESIDUAL_TOL = 1e-10

_FIXED = -1
_SLAVE = -2
_INACTIVE = -3


class SolverError(RuntimeError):
    """Raised when a model cannot be assembled or solved."""


class MechanismError(SolverError):
    """Singular stiffness: an under-constrained DOF admits rigid motion."""

    def __init__(self, message, point_id=None, dof=None):
        super().__init__(message)
        self.point_id = point_id
        self.dof = dof


class ConvergenceError(SolverError):
    """Iterative solver failed to reach the requested residual."""


@dataclass
class SolveStats:
    method: str
    iterations: int
    relative_residual: float
    wall_time: float


@dataclass
class DofMap:
    """Per-point slot states: free (equation index), fixed, slave or inactive."""

    point_ids: list
    index_of: dict
    state: np.ndarray  # (n, 6) int: >=0 equation index, else _FIXED/_SLAVE/_INACTIVE
    fixed_slot: np.ndarray  # (n, 6) int: >=0 reaction row, -1 otherwise
    n_eq: int
    n_fixed: int
    links: dict  # slave point id -> (master point id, r vector)
    labels: list  # equation index -> (point id, dof name)

    def expansion(self, pi: int, comp: int):
        """Rows of the constraint transformation for slot (point, comp).

        Returns [(eq_or_fixed_row, coeff, is_fixed)].  Free and fixed slots
        map to themselves; slave slots map onto their master's slots via
        u_s = u_m + theta_m x r.
        """
        s = self.state[pi, comp]
        if s >= 0:
            return [(int(s), 1.0, False)]
        if s == _FIXED:
            return [(int(self.fixed_slot[pi, comp]), 1.0, True)]
        if s == _INACTIVE:
            return []
        pid = self.point_ids[pi]
        master_pid, r = self.links[pid]
        mi = self.index_of[master_pid]
        terms = []
        if comp < 3:
            terms.append((mi, comp, 1.0))
            # (theta x r) component: rotation couplings
            if comp == 0:
                terms += [(mi, 4, r[2]), (mi, 5, -r[1])]
            elif comp == 1:
                terms += [(mi, 3, -r[2]), (mi, 5, r[0])]
            else:
                terms += [(mi, 3, r[1]), (mi, 4, -r[0])]
        else:
            terms.append((mi, comp, 1.0))
        out = []
        for mpi, mcomp, coeff in terms:
            if coeff == 0.0:
                continue
            ms = self.state[mpi, mcomp]
            if ms >= 0:
                out.append((int(ms), coeff, False))
            elif ms == _FIXED:
                out.append((int(self.fixed_slot[mpi, mcomp]), coeff, True))
            elif ms == _INACTIVE:
                raise SolverError(
                    f"rigid link master {master_pid} has inactive rotations"
                )
            else:
                raise SolverError(f"rigid link master {master_pid} is itself a slave")
        return out


@dataclass
class LinearSystem:
    """Reduced symmetric system plus the bookkeeping for reactions.

    ``reaction_matrix`` holds the fixed-slot rows of the full stiffness
    against the free columns, so reactions follow as K_cf u - f_c once the
    free displacements are known.  ``applied_loads`` keeps the physical
    per-point load resultants (nodal loads plus self-weight equivalents)
    before any rigid-link remapping.
    """

    K: sp.csr_matrix
    f: np.ndarray
    reaction_matrix: sp.csr_matrix
    reaction_rhs: np.ndarray
    dofmap: DofMap
    applied_loads: np.ndarray  # (n_points, 6)


def element_triad(xa, xb, ref_axis=None, ref_dir=None):
    """Rows of the local axis triad [ex, ey, ez] for an element a->b."""
    dx = np.asarray(xb, dtype=float) - np.asarray(xa, dtype=float)
    L = float(np.linalg.norm(dx))
    if L == 0.0:
        raise SolverError("zero-length cell")
    ex = dx / L
    if ref_dir is None:
        ref = np.array([0.0, 0.0, 1.0])
        if np.linalg.norm(np.cross(ex, ref)) < _VERTICAL_TOL:
            ref = np.array([1.0, 0.0, 0.0])
        ref_axis = "z"
    else:
        ref = np.asarray(ref_dir, dtype=float)
        norm = np.linalg.norm(ref)
        if norm == 0.0:
            raise SolverError("zero reference direction for element orientation")
        ref = ref / norm
    proj = ref - (ref @ ex) * ex
    norm = np.linalg.norm(proj)
    if norm < 1e-12:
        raise SolverError("reference direction is parallel to the element axis")
    if ref_axis == "y":
        ey = proj / norm
        ez = np.cross(ex, ey)
    else:
        ez = proj / norm
        ey = np.cross(ez, ex)
    return np.array([ex, ey, ez]), L


def _axis_from_code(code: int) -> np.ndarray:
    axis = abs(code) - 1
    if axis not in (0, 1, 2):
        raise SolverError(f"bad global axis code {code} in section orientation")
    e = np.zeros(3)
    e[axis] = 1.0 if code > 0 else -1.0
    return e


def _section_reference(model, shape, xa):
    """Reference axis/direction from a rectangle's orientation spec."""
    if not isinstance(shape, Rectangle) or shape.ref_axis is None:
        return None, None
    code = shape.ref_code
    if code < 0:
        return shape.ref_axis, _axis_from_code(code)
    by_id = model.point_by_id()
    if code not in by_id:
        raise SolverError(f"section reference point {code} does not exist")
    return shape.ref_axis, by_id[code].coords - xa


def _beam_local_stiffness(E, G, A, Iy, Iz, J, L):
    k = np.zeros((12, 12))
    ea = E * A / L
    gj = G * J / L
    k[0, 0] = k[6, 6] = ea
    k[0, 6] = k[6, 0] = -ea
    k[3, 3] = k[9, 9] = gj
    k[3, 9] = k[9, 3] = -gj
    # bending in the x-y plane (v along local y, rotation rz)
    a = 12.0 * E * Iz / L**3
    b = 6.0 * E * Iz / L**2
    c = 4.0 * E * Iz / L
    d = 2.0 * E * Iz / L
    k[1, 1] = k[7, 7] = a
    k[1, 7] = k[7, 1] = -a
    k[1, 5] = k[5, 1] = k[1, 11] = k[11, 1] = b
    k[5, 7] = k[7, 5] = k[7, 11] = k[11, 7] = -b
    k[5, 5] = k[11, 11] = c
    k[5, 11] = k[11, 5] = d
    # bending in the x-z plane (w along local z, rotation ry = -w')
    a = 12.0 * E * Iy / L**3
    b = 6.0 * E * Iy / L**2
    c = 4.0 * E * Iy / L
    d = 2.0 * E * Iy / L
    k[2, 2] = k[8, 8] = a
    k[2, 8] = k[8, 2] = -a
    k[2, 4] = k[4, 2] = k[2, 10] = k[10, 2] = -b
    k[4, 8] = k[8, 4] = k[8, 10] = k[10, 8] = b
    k[4, 4] = k[10, 10] = c
    k[4, 10] = k[10, 4] = d
    return k


def _truss_local_stiffness(E, A, L):
    k = np.zeros((12, 12))
    ea = E * A / L
    k[0, 0] = k[6, 6] = ea
    k[0, 6] = k[6, 0] = -ea
    return k


def _expand_rotation(Tl):
    R = np.zeros((12, 12))
    for i in range(4):
        R[3 * i : 3 * i + 3, 3 * i : 3 * i + 3] = Tl
    return R


@dataclass
class _ElementData:
    cell_id: int
    pa: int  # point ids
    pb: int
    L: float
    rotation: np.ndarray  # (12, 12)
    k_local: np.ndarray
    f_local: np.ndarray  # consistent equivalent nodal loads, local axes


def _element_system(model, cell, by_id) -> _ElementData:
    pa, pb = cell.connectivity
    xa = by_id[pa].coords
    xb = by_id[pb].coords
    cs = model.cross_sections[cell.cs_id]
    mat = model.materials[cell.mat_id]
    props = cs.properties
    ref_axis, ref_dir = _section_reference(model, cs.shape, xa)
    Tl, L = element_triad(xa, xb, ref_axis, ref_dir)
    if cell.kind == TRUSS_LINE:
        k_local = _truss_local_stiffness(mat.E, props.A, L)
    else:
        k_local = _beam_local_stiffness(mat.E, mat.G, props.A, props.Iy, props.Iz, props.J, L)

    f_local = np.zeros(12)
    if model.self_weight_enabled and mat.density > 0.0:
        q_global = mat.density * props.A * model.gravity * KG_MM_S2_TO_N  # N/mm
        qx, qy, qz = Tl @ q_global
        half = L / 2.0
        f_local[0] = f_local[6] = qx * half
        f_local[1] = f_local[7] = qy * half
        f_local[2] = f_local[8] = qz * half
        if cell.kind == BEAM_LINE:
            m = L**2 / 12.0
            f_local[4] = -qz * m
            f_local[10] = qz * m
            f_local[5] = qy * m
            f_local[11] = -qy * m
    R = _expand_rotation(Tl)
    return _ElementData(cell.id, pa, pb, L, R, k_local, f_local)


def beam_stiffness(model: StructuralModel, cell) -> np.ndarray:
    """Global 12x12 stiffness of a beam cell."""
    if cell.kind != BEAM_LINE:
        raise ValueError("beam_stiffness expects a beam-line cell")
    ed = _element_system(model, cell, model.point_by_id())
    return ed.rotation.T @ ed.k_local @ ed.rotation


def truss_stiffness(model: StructuralModel, cell) -> np.ndarray:
    """Global 12x12 stiffness of a truss cell (rotational rows zero)."""
    if cell.kind != TRUSS_LINE:
        raise ValueError("truss_stiffness expects a truss-line cell")
    ed = _element_system(model, cell, model.point_by_id())
    return ed.rotation.T @ ed.k_local @ ed.rotation


def build_dof_map(model: StructuralModel) -> DofMap:
    n = len(model.points)
    point_ids = [p.id for p in model.points]
    index_of = {pid: i for i, pid in enumerate(point_ids)}

    has_beam = set()
    for c in model.cells:
        if c.kind == BEAM_LINE:
            has_beam.update(c.connectivity)

    links = {}
    for link in model.rigid_links:
        if link.master not in index_of or link.slave not in index_of:
            raise SolverError("rigid link references a missing point")
        r = resolve_link_offset(model, link)
        links[link.slave] = (link.master, r)
        has_beam.add(link.master)
        has_beam.add(link.slave)
    for slave in links:
        if slave in {m for m, _ in links.values()}:
            raise SolverError(f"rigid link point {slave} is both master and slave")

    state = np.full((n, 6), _INACTIVE, dtype=np.int64)
    fixed_slot = np.full((n, 6), -1, dtype=np.int64)
    labels = []
    n_eq = 0
    n_fixed = 0
    for i, p in enumerate(model.points):
        if p.id in links:
            if np.any(p.constraint_mask):
                raise SolverError(
                    f"rigid link slave {p.id} may not carry support constraints"
                )
            state[i, :] = _SLAVE
            continue
        rot_active = p.id in has_beam
        for comp in range(6):
            if p.constraint_mask[comp]:
                state[i, comp] = _FIXED
                fixed_slot[i, comp] = n_fixed
                n_fixed += 1
            elif comp >= 3 and not rot_active:
                state[i, comp] = _INACTIVE
            else:
                state[i, comp] = n_eq
                labels.append((p.id, DOF_NAMES[comp]))
                n_eq += 1

    return DofMap(
        point_ids=point_ids,
        index_of=index_of,
        state=state,
        fixed_slot=fixed_slot,
        n_eq=n_eq,
        n_fixed=n_fixed,
        links=links,
        labels=labels,
    )


def assemble(model: StructuralModel, *, check_supports: bool = True):
    """Assemble the reduced stiffness and load vector.

    Requires a model that validates cleanly; with ``check_supports`` every
    connected component must also carry at least six fixed DOFs.  Returns
    ``(LinearSystem, DofMap)``.
    """
    report = validate(model)
    if not report.ok:
        first = report.defects[0].message
        raise SolverError(f"model does not validate ({len(report.defects)} defects; first: {first})")
    if check_supports:
        unsupported = check_support_reachability(model)
        if unsupported:
            worst = unsupported[0]
            raise SolverError(
                f"{len(unsupported)} component(s) lack supports; e.g. points "
                f"{worst.point_ids[:5]} with {worst.fixed_dof_count} fixed DOFs"
            )

    dm = build_dof_map(model)
    by_id = model.point_by_id()
    n_points = len(model.points)

    expansions = {}

    def slot_terms(pid, comp):
        key = (pid, comp)
        if key not in expansions:
            expansions[key] = dm.expansion(dm.index_of[pid], comp)
        return expansions[key]

    rows, cols, vals = [], [], []
    r_rows, r_cols, r_vals = [], [], []
    f = np.zeros(dm.n_eq)
    f_react = np.zeros(dm.n_fixed)
    applied = np.zeros((n_points, 6))

    def scatter_load(pid, comp, value):
        for idx, coeff, is_fixed in slot_terms(pid, comp):
            if is_fixed:
                f_react[idx] += coeff * value
            else:
                f[idx] += coeff * value

    for cell in model.cells:
        ed = _element_system(model, cell, by_id)
        k_g = ed.rotation.T @ ed.k_local @ ed.rotation
        f_g = ed.rotation.T @ ed.f_local
        slots = [(ed.pa, c) for c in range(6)] + [(ed.pb, c) for c in range(6)]
        terms = [slot_terms(pid, comp) for pid, comp in slots]
        for i in range(12):
            ti = terms[i]
            if not ti:
                continue
            fi = f_g[i]
            if fi != 0.0:
                pid, comp = slots[i]
                applied[dm.index_of[pid], comp] += fi
                for idx, coeff, is_fixed in ti:
                    if is_fixed:
                        f_react[idx] += coeff * fi
                    else:
                        f[idx] += coeff * fi
            for j in range(12):
                kij = k_g[i, j]
                if kij == 0.0:
                    continue
                for idx_i, ci, fixed_i in ti:
                    for idx_j, cj, fixed_j in terms[j]:
                        if fixed_j:
                            continue  # prescribed values are zero
                        v = ci * cj * kij
                        if fixed_i:
                            r_rows.append(idx_i)
                            r_cols.append(idx_j)
                            r_vals.append(v)
                        else:
                            rows.append(idx_i)
                            cols.append(idx_j)
                            vals.append(v)

    for p in model.points:
        if p.bc_id == 0:
            continue
        comps = model.bcs[p.bc_id].components
        pi = dm.index_of[p.id]
        for comp in range(6):
            value = comps[comp]
            if value == 0.0:
                continue
            if dm.state[pi, comp] == _INACTIVE:
                raise SolverError(
                    f"moment load on rotation-free point {p.id} ({DOF_NAMES[comp]})"
                )
            applied[pi, comp] += value
            scatter_load(p.id, comp, value)

    K = sp.coo_matrix((vals, (rows, cols)), shape=(dm.n_eq, dm.n_eq)).tocsr()
    Kr = sp.coo_matrix((r_vals, (r_rows, r_cols)), shape=(dm.n_fixed, dm.n_eq)).tocsr()
    system = LinearSystem(
        K=K, f=f, reaction_matrix=Kr, reaction_rhs=f_react, dofmap=dm, applied_loads=applied
    )
    return system, dm


def _diagnose_singular(system: LinearSystem):
    """Name the first DOF where a symmetric factorization loses positivity."""
    n = system.K.shape[0]
    if n > 1500:
        raise MechanismError(
            "stiffness matrix is singular (kinematic mechanism); system too "
            "large for pivot diagnosis"
        )
    A = system.K.toarray().copy()
    scale = float(np.max(np.abs(np.diag(A)))) or 1.0
    tol = 1e-12 * scale
    L = np.zeros_like(A)
    for j in range(n):
        d = A[j, j] - L[j, :j] @ L[j, :j]
        if d <= tol:
            pid, dof = system.dofmap.labels[j]
            raise MechanismError(
                f"zero pivot at point {pid} dof {dof}: local kinematic mechanism",
                point_id=pid,
                dof=dof,
            )
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1 :, j] = (A[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    raise MechanismError("direct solve failed although all pivots are positive")


def solve_direct(system: LinearSystem, residual_tol: float = _DIRECT_RESIDUAL_TOL):
    """Sparse direct solve with residual verification.

    One or two rounds of iterative refinement keep the relative residual at
    or below ``residual_tol``; a singular factorization triggers a pivot
    diagnosis naming the offending DOF.
    """
    t0 = time.perf_counter()
    n = system.K.shape[0]
    if n == 0:
        return np.zeros(0), SolveStats("direct", 0, 0.0, time.perf_counter() - t0)
    fnorm = float(np.linalg.norm(system.f))
    try:
        lu = spla.splu(system.K.tocsc())
        u = lu.solve(system.f)
    except (RuntimeError, ValueError):
        _diagnose_singular(system)
        raise  # unreachable; diagnosis always raises
    if fnorm == 0.0:
        return np.zeros(n), SolveStats("direct", 0, 0.0, time.perf_counter() - t0)
    if not np.all(np.isfinite(u)):
        _diagnose_singular(system)
    res = float(np.linalg.norm(system.K @ u - system.f)) / fnorm
    for _ in range(2):
        if res <= residual_tol:
            break
        u = u + lu.solve(system.f - system.K @ u)
        res = float(np.linalg.norm(system.K @ u - system.f)) / fnorm
    if res > residual_tol or not np.isfinite(res):
        _diagnose_singular(system)
    return u, SolveStats("direct", 0, res, time.perf_counter() - t0)


class _IC0Breakdown(Exception):
    pass


def _ichol0(K: sp.csc_matrix, shift: float = 0.0):
    """Zero-fill incomplete Cholesky on the lower-triangular pattern of K.

    Returns L (csc) with K ~ L L^T on the pattern of K.  Raises
    _IC0Breakdown when a pivot loses positivity.
    """
    A = sp.tril(K, format="csc")
    n = A.shape[0]
    indptr, indices, data = A.indptr, A.indices, A.data
    rows = [dict() for _ in range(n)]
    for j in range(n):
        start, end = indptr[j], indptr[j + 1]
        if start == end or indices[start] != j:
            raise _IC0Breakdown(f"missing diagonal at {j}")
        rowj = rows[j]
        ajj = data[start] + shift
        s = ajj - sum(v * v for v in rowj.values())
        if s <= 0.0:
            raise _IC0Breakdown(f"nonpositive pivot at {j}")
        dj = float(np.sqrt(s))
        rowj[j] = dj
        for k in range(start + 1, end):
            i = indices[k]
            rowi = rows[i]
            # rows[i] holds columns < j only, so the diagonal term never leaks in
            if len(rowi) <= len(rowj):
                acc = sum(v * rowj[c] for c, v in rowi.items() if c in rowj)
            else:
                acc = sum(v * rowi[c] for c, v in rowj.items() if c in rowi)
            rows[i][j] = (data[k] - acc) / dj
    cols_i = []
    cols_j = []
    cols_v = []
    for i, row in enumerate(rows):
        for j, v in row.items():
            cols_i.append(i)
            cols_j.append(j)
            cols_v.append(v)
    return sp.coo_matrix((cols_v, (cols_i, cols_j)), shape=(n, n)).tocsc()


def _ichol0_with_shifts(K: sp.csc_matrix):
    """IC(0) with the diagonal-shift retry policy.

    On breakdown, add sigma = 1e-3 * mean(diag) and refactor, doubling the
    shift up to three times before giving up.
    """
    diag_mean = float(np.mean(K.diagonal())) or 1.0
    shifts = [0.0] + [1e-3 * diag_mean * 2.0**k for k in range(4)]
    last = None
    for shift in shifts:
        try:
            return _ichol0(K, shift=shift), shift
        except _IC0Breakdown as exc:
            last = exc
    raise SolverError(f"incomplete Cholesky broke down despite shifts: {last}")


def solve_pcg_ichol(system: LinearSystem, tol: float = 1e-10, max_iter: int | None = None):
    """Conjugate gradients preconditioned by zero-fill incomplete Cholesky.

    Converges on the relative preconditioned residual sqrt(r' M^-1 r)
    measured against the initial one; raises ConvergenceError if max_iter
    (default 10 * n_eq) is exhausted.
    """
    if not (0.0 < tol < 1.0):
        raise ValueError("tol must lie in (0, 1)")
    t0 = time.perf_counter()
    K = system.K.tocsc()
    n = K.shape[0]
    if n == 0:
        return np.zeros(0), SolveStats("pcg-ichol", 0, 0.0, time.perf_counter() - t0)
    if max_iter is None:
        max_iter = max(10 * n, 20)
    b = system.f
    if float(np.linalg.norm(b)) == 0.0:
        return np.zeros(n), SolveStats("pcg-ichol", 0, 0.0, time.perf_counter() - t0)

    L, _shift = _ichol0_with_shifts(K)
    L_csr = L.tocsr()
    LT_csr = L.T.tocsr()

    def precondition(r):
        y = spla.spsolve_triangular(L_csr, r, lower=True)
        return spla.spsolve_triangular(LT_csr, y, lower=False)

    x = np.zeros(n)
    r = b.copy()
    z = precondition(r)
    p = z.copy()
    rz = float(r @ z)
    denom = np.sqrt(abs(rz)) or 1.0
    relres = 1.0
    iterations = 0
    K_csr = system.K
    for k in range(1, max_iter + 1):
        Ap = K_csr @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0 or not np.isfinite(pAp):
            raise SolverError("PCG breakdown: matrix is not positive definite")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = precondition(r)
        rz_new = float(r @ z)
        relres = np.sqrt(max(rz_new, 0.0)) / denom
        iterations = k
        if relres <= tol:
            break
        p = z + (rz_new / rz) * p
        rz = rz_new
    else:
        raise ConvergenceError(
            f"PCG did not reach tol={tol:g} within {max_iter} iterations "
            f"(residual {relres:.3e})"
        )
    return x, SolveStats("pcg-ichol", iterations, relres, time.perf_counter() - t0)


def solve_system(system: LinearSystem, method: str = "direct", tol: float = 1e-10,
                 max_iter: int | None = None):
    if method == "direct":
        return solve_direct(system)
    if method in ("pcg", "pcg-ichol"):
        return solve_pcg_ichol(system, tol=tol, max_iter=max_iter)
    raise ValueError(f"unknown solver method {method!r}")


def expand_displacements(dm: DofMap, u: np.ndarray) -> np.ndarray:
    """Per-point 6-DOF displacements from the reduced solution vector."""
    n = len(dm.point_ids)
    full = np.zeros((n, 6))
    for i in range(n):
        for comp in range(6):
            s = dm.state[i, comp]
            if s >= 0:
                full[i, comp] = u[s]
    for slave_pid, (master_pid, r) in dm.links.items():
        si = dm.index_of[slave_pid]
        mi = dm.index_of[master_pid]
        um = full[mi]
        theta = um[3:]
        full[si, :3] = um[:3] + np.cross(theta, r)
        full[si, 3:] = theta
    return full


def reaction_forces(system: LinearSystem, u: np.ndarray) -> np.ndarray:
    """Per-point reaction resultants at fixed slots, zero elsewhere."""
    dm = system.dofmap
    r = system.reaction_matrix @ u - system.reaction_rhs
    out = np.zeros((len(dm.point_ids), 6))
    for i in range(len(dm.point_ids)):
        for comp in range(6):
            slot = dm.fixed_slot[i, comp]
            if slot >= 0:
                out[i, comp] = r[slot]
    return out


def recover_end_forces(model: StructuralModel, displacements: np.ndarray) -> np.ndarray:
    """Element end forces in local axes, (n_cells, 2, 6) as (N, Vy, Vz, T, My, Mz).

    Computed as k_local u_local minus the self-weight fixed-end actions, so
    each element's end forces balance the load applied along it.
    """
    by_id = model.point_by_id()
    index = model.point_index()
    disp = np.asarray(displacements, dtype=float)
    out = np.zeros((len(model.cells), 2, 6))
    for ci, cell in enumerate(model.cells):
        ed = _element_system(model, cell, by_id)
        u_g = np.concatenate([disp[index[ed.pa]], disp[index[ed.pb]]])
        u_l = ed.rotation @ u_g
        p = ed.k_local @ u_l - ed.f_local
        out[ci] = p.reshape(2, 6)
    return out
