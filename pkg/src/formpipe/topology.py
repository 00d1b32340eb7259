"""Topological connectivity and the repair suite: duplicate-node merging,
degenerate/duplicate cell removal, detached-component elimination, dead-arm
pruning, support reachability and rigid-link registration.

Repair operations mutate the model in place and return ``(model, report)``;
they keep original entity ids so the reports stay traceable.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .model import DEFAULT_MERGE_TOL, RigidLink, StructuralModel


class TopologyError(ValueError):
    """Raised when a repair operation cannot be applied."""


@dataclass
class Topology:
    """Vertex-to-cell incidence and the cell adjacency graph."""

    vertex_to_cells: dict
    cell_adjacency: dict


@dataclass
class RepairReport:
    """Per-operation record of what a repair removed or merged."""

    merged_point_pairs: list = field(default_factory=list)  # (survivor, removed)
    removed_degenerate_cells: list = field(default_factory=list)
    removed_duplicate_cells: list = field(default_factory=list)
    removed_components: list = field(default_factory=list)  # (cell count, representative point)
    pruned_arm_points: list = field(default_factory=list)
    element_removal_fraction: float = 0.0

    def is_empty(self) -> bool:
        return not (
            self.merged_point_pairs
            or self.removed_degenerate_cells
            or self.removed_duplicate_cells
            or self.removed_components
            or self.pruned_arm_points
        )


@dataclass
class UnsupportedComponent:
    point_ids: list
    fixed_dof_count: int


def build_topology(model: StructuralModel) -> Topology:
    """Assemble incidence and adjacency over the model's cells."""
    vertex_to_cells = {p.id: [] for p in model.points}
    for c in model.cells:
        for pid in set(c.connectivity):
            vertex_to_cells[pid].append(c.id)
    cell_adjacency = {}
    for c in model.cells:
        neigh = set()
        for pid in c.connectivity:
            neigh.update(vertex_to_cells[pid])
        neigh.discard(c.id)
        cell_adjacency[c.id] = sorted(neigh)
    return Topology(vertex_to_cells=vertex_to_cells, cell_adjacency=cell_adjacency)


class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _close_pairs(coords: np.ndarray, tol: float):
    """Index pairs (i, j), i < j, with Euclidean distance <= tol.

    Spatial hash with cell size tol; for tol == 0 only exactly coincident
    points pair up.
    """
    n = coords.shape[0]
    pairs = []
    if n < 2:
        return pairs
    if tol == 0.0:
        buckets = {}
        for i in range(n):
            buckets.setdefault(tuple(coords[i]), []).append(i)
        for group in buckets.values():
            base = group[0]
            pairs.extend((base, other) for other in group[1:])
        return pairs
    max_abs = float(np.max(np.abs(coords))) if n else 0.0
    if max_abs / tol > 2.0**62:  # hash keys would overflow; fall back to all pairs
        tol2 = tol * tol
        for i in range(n):
            d = coords[i + 1 :] - coords[i]
            close = np.nonzero(np.einsum("ij,ij->i", d, d) <= tol2)[0]
            pairs.extend((i, i + 1 + int(j)) for j in close)
        return pairs
    keys = np.floor(coords / tol).astype(np.int64)
    buckets = {}
    for i in range(n):
        buckets.setdefault(tuple(keys[i]), []).append(i)
    tol2 = tol * tol
    offsets = [
        (dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
    ]
    for key, group in buckets.items():
        candidates = []
        for off in offsets:
            nb = (key[0] + off[0], key[1] + off[1], key[2] + off[2])
            if nb >= key:  # visit each bucket pair once
                candidates.extend(buckets.get(nb, []) if nb != key else [])
        for ai in range(len(group)):
            i = group[ai]
            for j in group[ai + 1 :]:
                d = coords[i] - coords[j]
                if d @ d <= tol2:
                    pairs.append((min(i, j), max(i, j)))
            for j in candidates:
                d = coords[i] - coords[j]
                if d @ d <= tol2:
                    pairs.append((min(i, j), max(i, j)))
    return pairs


def merge_duplicate_nodes(model: StructuralModel, tol: float = DEFAULT_MERGE_TOL):
    """Merge points lying within ``tol`` of each other (transitive closure).

    The lowest id in each cluster survives and keeps its coordinates; cell
    connectivity and rigid links are rewired, constraint masks OR-combine.
    Raises TopologyError when merged points carry distinct nonzero load ids.
    """
    if tol < 0:
        raise ValueError("merge tolerance must be non-negative")
    coords = model.coords_array()
    ids = [p.id for p in model.points]
    uf = _UnionFind(range(len(ids)))
    for i, j in _close_pairs(coords, tol):
        uf.union(i, j)

    clusters = {}
    for i in range(len(ids)):
        clusters.setdefault(uf.find(i), []).append(i)

    report = RepairReport()
    remap = {}
    survivors = set()
    for members in clusters.values():
        members_ids = sorted(ids[i] for i in members)
        survivor = members_ids[0]
        survivors.add(survivor)
        for pid in members_ids:
            remap[pid] = survivor
        for pid in members_ids[1:]:
            report.merged_point_pairs.append((survivor, pid))

    if not report.merged_point_pairs:
        return model, report
    report.merged_point_pairs.sort()

    by_id = model.point_by_id()
    for members in clusters.values():
        if len(members) < 2:
            continue
        members_ids = sorted(ids[i] for i in members)
        target = by_id[members_ids[0]]
        bc_ids = {by_id[pid].bc_id for pid in members_ids} - {0}
        if len(bc_ids) > 1:
            raise TopologyError(
                f"cannot merge points {members_ids}: conflicting load ids {sorted(bc_ids)}"
            )
        for pid in members_ids[1:]:
            target.constraint_mask |= by_id[pid].constraint_mask
        if bc_ids:
            target.bc_id = bc_ids.pop()

    model.points = [p for p in model.points if p.id in survivors]
    for c in model.cells:
        c.connectivity = (remap[c.connectivity[0]], remap[c.connectivity[1]])

    kept_links = []
    seen_slaves = set()
    for link in model.rigid_links:
        master = remap.get(link.master, link.master)
        slave = remap.get(link.slave, link.slave)
        if master == slave:
            continue  # collapsed by the merge, constraint became trivial
        if slave in seen_slaves:
            raise TopologyError(f"merge leaves point {slave} slave of two rigid links")
        seen_slaves.add(slave)
        kept_links.append(RigidLink(master=master, slave=slave, offset=link.offset))
    model.rigid_links = kept_links
    return model, report


def remove_degenerate_cells(model: StructuralModel, tol: float = DEFAULT_MERGE_TOL):
    """Drop cells shorter than ``tol`` and collapse duplicate connectivity.

    Of several cells joining the same unordered point pair the one with the
    lowest id survives.
    """
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    by_id = model.point_by_id()
    report = RepairReport()
    n_before = len(model.cells)

    kept = []
    for c in model.cells:
        a, b = c.connectivity
        if a == b or np.linalg.norm(by_id[a].coords - by_id[b].coords) <= tol:
            report.removed_degenerate_cells.append(c.id)
        else:
            kept.append(c)

    seen = {}
    survivors = []
    for c in sorted(kept, key=lambda c: c.id):
        key = frozenset(c.connectivity)
        if key in seen:
            report.removed_duplicate_cells.append(c.id)
        else:
            seen[key] = c.id
            survivors.append(c)
    order = {c.id: i for i, c in enumerate(model.cells)}
    survivors.sort(key=lambda c: order[c.id])
    model.cells = survivors
    removed = n_before - len(model.cells)
    report.element_removal_fraction = removed / n_before if n_before else 0.0
    return model, report


def _components(model: StructuralModel):
    """Connected components over point ids; rigid links count as connections,
    isolated points form their own component."""
    adjacency = {p.id: [] for p in model.points}
    for c in model.cells:
        a, b = c.connectivity
        if a != b:
            adjacency[a].append(b)
            adjacency[b].append(a)
    for link in model.rigid_links:
        if link.master in adjacency and link.slave in adjacency:
            adjacency[link.master].append(link.slave)
            adjacency[link.slave].append(link.master)
    seen = set()
    comps = []
    for p in model.points:
        if p.id in seen:
            continue
        comp = set()
        queue = deque([p.id])
        seen.add(p.id)
        while queue:
            pid = queue.popleft()
            comp.add(pid)
            for nb in adjacency[pid]:
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        comps.append(comp)
    return comps


def remove_detached_components(model: StructuralModel):
    """Keep only the connected component with the most cells.

    Ties break towards the component containing the lowest point id.  The
    report lists removed components as (cell count, representative point).
    """
    if not model.points:
        raise TopologyError("cannot locate the main body of an empty model")
    comps = _components(model)
    report = RepairReport()
    if len(comps) == 1:
        return model, report

    n_before = len(model.cells)
    comp_of = {}
    for idx, comp in enumerate(comps):
        for pid in comp:
            comp_of[pid] = idx
    cells_in = [0] * len(comps)
    for c in model.cells:
        cells_in[comp_of[c.connectivity[0]]] += 1
    counts = [(cells_in[i], min(comp), comp) for i, comp in enumerate(comps)]
    main = max(counts, key=lambda t: (t[0], -t[1]))
    keep = main[2]
    for n_cells, rep, comp in sorted(counts, key=lambda t: t[1]):
        if comp is main[2]:
            continue
        report.removed_components.append((n_cells, rep))
    model.points = [p for p in model.points if p.id in keep]
    model.cells = [c for c in model.cells if c.connectivity[0] in keep]
    model.rigid_links = [
        l for l in model.rigid_links if l.master in keep and l.slave in keep
    ]
    removed = n_before - len(model.cells)
    report.element_removal_fraction = removed / n_before if n_before else 0.0
    return model, report


def protected_points(model: StructuralModel) -> set:
    """Points that pruning must never remove: supported or loaded ones."""
    return {
        p.id
        for p in model.points
        if p.bc_id != 0 or bool(np.any(p.constraint_mask))
    }


def prune_dead_arms(
    model: StructuralModel,
    max_degree: int = 2,
    protected: set | None = None,
):
    """Peel away thin arms: repeatedly delete unprotected points with at most
    ``max_degree`` incident cells, together with those cells, to a fixpoint.

    The fixpoint is order-independent (degrees only drop as points go), so a
    one-at-a-time recomputation gives the same survivors.  Raises
    TopologyError if peeling would empty the model.
    """
    if max_degree < 1:
        raise ValueError("max_degree must be at least 1")
    if protected is None:
        protected = protected_points(model)

    incident = {p.id: set() for p in model.points}
    for c in model.cells:
        a, b = c.connectivity
        incident[a].add(c.id)
        if b != a:
            incident[b].add(c.id)
    cell_by_id = {c.id: c for c in model.cells}

    removed_points = set()
    removed_cells = set()
    queue = deque(
        pid
        for pid, cells in incident.items()
        if pid not in protected and len(cells) <= max_degree
    )
    while queue:
        pid = queue.popleft()
        if pid in removed_points or pid in protected:
            continue
        if len(incident[pid]) > max_degree:
            continue
        removed_points.add(pid)
        for cid in list(incident[pid]):
            if cid in removed_cells:
                continue
            removed_cells.add(cid)
            for other in cell_by_id[cid].connectivity:
                if other == pid or other in removed_points:
                    continue
                incident[other].discard(cid)
                if other not in protected and len(incident[other]) <= max_degree:
                    queue.append(other)
        incident[pid] = set()

    if removed_points and len(removed_points) == len(model.points):
        raise TopologyError("pruning would empty the model")

    report = RepairReport()
    if not removed_points:
        return model, report
    n_before = len(model.cells)
    report.pruned_arm_points = sorted(removed_points)
    model.points = [p for p in model.points if p.id not in removed_points]
    model.cells = [c for c in model.cells if c.id not in removed_cells]
    model.rigid_links = [
        l
        for l in model.rigid_links
        if l.master not in removed_points and l.slave not in removed_points
    ]
    report.element_removal_fraction = (
        len(removed_cells) / n_before if n_before else 0.0
    )
    return model, report


def check_support_reachability(model: StructuralModel):
    """Flag connected components whose fixed-DOF total cannot restrain a rigid
    body (fewer than 6 fixed DOFs, which covers fully unsupported ones).

    Genuine local mechanisms beyond this count survive until factorization,
    which reports the offending DOF.
    """
    findings = []
    by_id = model.point_by_id()
    for comp in _components(model):
        fixed = sum(int(np.sum(by_id[pid].constraint_mask)) for pid in comp)
        if fixed < 6:
            findings.append(
                UnsupportedComponent(point_ids=sorted(comp), fixed_dof_count=fixed)
            )
    findings.sort(key=lambda f: f.point_ids[0])
    return findings


def make_rigid_link(
    model: StructuralModel,
    master: int,
    slave: int,
    offset=None,
) -> StructuralModel:
    """Register a rigid arm tying the slave's DOFs to the master's.

    Links are single-level: a master may own several slaves, but a slave may
    not act as master (and vice versa), which rules out constraint cycles.
    """
    by_id = model.point_by_id()
    if master not in by_id or slave not in by_id:
        raise TopologyError(f"rigid link references missing point ({master}, {slave})")
    if master == slave:
        raise TopologyError("rigid link master and slave must differ")
    for link in model.rigid_links:
        if link.slave == slave:
            raise TopologyError(f"point {slave} is already slave of a rigid link")
        if link.master == slave or link.slave == master:
            raise TopologyError("rigid links may not chain (slave used as master)")
    if offset is not None:
        offset = np.asarray(offset, dtype=float)
        if offset.shape != (3,) or not np.all(np.isfinite(offset)):
            raise TopologyError("rigid link offset must be a finite 3-vector")
    model.rigid_links.append(RigidLink(master=master, slave=slave, offset=offset))
    return model


def resolve_link_offset(model: StructuralModel, link: RigidLink) -> np.ndarray:
    """Arm vector r for a link; falls back to the point positions."""
    if link.offset is not None:
        return np.asarray(link.offset, dtype=float)
    by_id = model.point_by_id()
    return by_id[link.slave].coords - by_id[link.master].coords
