"""Parametric model generators for the benchmark cases: a steel cantilever,
a self-supporting interleaved-beam timber arch, and a sphere-packing lattice
homogenized into a beam grid.

All generators emit models that validate cleanly and are deterministic for a
given spec (the lattice additionally takes a seed for its injected-defect
placement).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    BoundaryConditionEntry,
    Cell,
    Circle,
    CrossSection,
    GenericSection,
    Material,
    Point,
    Rectangle,
    StructuralModel,
)

STEEL = dict(E=210.0e3, nu=0.2, tAlpha=1.2e-5, density=7850.0e-9, Ry=300.0)
TIMBER = dict(E=11.0e3, nu=0.3, tAlpha=5.0e-6, density=500.0e-9, Ry=24.0)


@dataclass(frozen=True)
class CantileverSpec:
    """Straight cantilever along +x, fully fixed at the origin, loaded
    vertically downward at the free tip."""

    length: float = 1000.0  # mm
    diameter: float = 20.0  # mm
    tip_force: float = 264.777  # N, applied as -z
    n_elements: int = 1

    def __post_init__(self):
        if self.length <= 0 or self.diameter <= 0 or self.n_elements < 1:
            raise ValueError("cantilever spec values must be positive")


def gen_cantilever(spec: CantileverSpec = CantileverSpec()) -> StructuralModel:
    model = StructuralModel(comment="generated - cantilever")
    n = spec.n_elements
    for i in range(n + 1):
        model.points.append(Point(id=i, coords=(spec.length * i / n, 0.0, 0.0)))
    model.points[0].constraint_mask[:] = True
    for i in range(n):
        model.cells.append(Cell(id=i, connectivity=(i, i + 1), cs_id=2, mat_id=1))
    model.cross_sections[2] = CrossSection(id=2, shape=Circle(diameter=spec.diameter))
    model.materials[1] = Material(id=1, **STEEL)
    if spec.tip_force != 0.0:
        model.bcs[1] = BoundaryConditionEntry(
            id=1, components=(0.0, 0.0, -spec.tip_force, 0.0, 0.0, 0.0)
        )
        model.points[n].bc_id = 1
    return model


@dataclass(frozen=True)
class LeonardoSpec:
    """Planar self-supporting arch of interleaved straight beams.

    Stations sit on a parabolic arc; odd stations drop by ``row_offset`` so
    that the straight longitudinal members (station j to j+2) of the two rows
    cross each other, tied at the stations by short bearer members.
    ``n_segments`` counts the longitudinal members; odd values give a
    mirror-symmetric arch.  The closed variant carries the two bottom chords
    that close the end panels; the open variant omits them; closed_mobile
    additionally frees the horizontal DOF of the second support.
    """

    span: float = 35000.0  # mm
    height: float = 13000.0  # mm
    n_segments: int = 7
    beam_width: float = 200.0  # mm
    beam_height: float = 300.0  # mm
    variant: str = "closed"
    roof_dead_load: float = 5000.0  # N per loaded node, downward
    snow_load: float = 3000.0  # N per loaded node, downward
    row_offset: float | None = None  # default: one beam height

    def __post_init__(self):
        if self.n_segments < 3:
            raise ValueError("the arch needs at least 3 segments")
        if self.variant not in ("open", "closed", "closed_mobile"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if min(self.span, self.height, self.beam_width, self.beam_height) <= 0:
            raise ValueError("arch dimensions must be positive")


def gen_leonardo(spec: LeonardoSpec = LeonardoSpec()) -> StructuralModel:
    m = spec.n_segments
    n_sta = m + 2
    drop = spec.row_offset if spec.row_offset is not None else spec.beam_height
    model = StructuralModel(comment=f"generated - leonardo arch ({spec.variant})")

    # build coordinates mirror-symmetrically so symmetric specs stay exact
    half = (n_sta - 1) / 2.0
    for j in range(n_sta):
        x = spec.span * j / (n_sta - 1)
        if j > half:
            x = spec.span - spec.span * (n_sta - 1 - j) / (n_sta - 1)
        t = x / spec.span
        z = 4.0 * spec.height * t * (1.0 - t)
        if j % 2 == 1:
            z -= drop
        model.points.append(Point(id=j, coords=(x, 0.0, z)))

    closing = {(0, 2), (m - 1, m + 1)}
    cid = 0
    for j in range(m):  # longitudinal members
        if spec.variant == "open" and (j, j + 2) in closing:
            continue
        model.cells.append(Cell(id=cid, connectivity=(j, j + 2), cs_id=1, mat_id=1))
        cid += 1
    for j in range(n_sta - 1):  # bearers tying the two rows
        model.cells.append(Cell(id=cid, connectivity=(j, j + 1), cs_id=1, mat_id=1))
        cid += 1

    model.cross_sections[1] = CrossSection(
        id=1, shape=Rectangle(width=spec.beam_width, height=spec.beam_height)
    )
    model.materials[1] = Material(id=1, **TIMBER)

    model.points[0].constraint_mask[:] = True
    model.points[n_sta - 1].constraint_mask[:] = True
    if spec.variant == "closed_mobile":
        model.points[n_sta - 1].constraint_mask[0] = False  # mobile support: ux free

    load = spec.roof_dead_load + spec.snow_load
    if load != 0.0:
        model.bcs[1] = BoundaryConditionEntry(
            id=1, components=(0.0, 0.0, -load, 0.0, 0.0, 0.0)
        )
        for j in range(2, n_sta - 2, 2):  # top-chord stations, supports excluded
            model.points[j].bc_id = 1
    return model


def full_block_occupancy(nx: int, ny: int, nz: int) -> np.ndarray:
    return np.ones((nx, ny, nz), dtype=bool)


def arch_occupancy(nx: int, ny: int, nz: int, thickness: float = 3.0) -> np.ndarray:
    """Arch-shaped vault: an annular segment in the x-z plane swept along y."""
    occ = np.zeros((nx, ny, nz), dtype=bool)
    cx = (nx - 1) / 2.0
    outer = min(cx, float(nz - 1))
    inner = outer - thickness
    for i in range(nx):
        for k in range(nz):
            r = math.hypot(i - cx, k)
            if inner <= r <= outer:
                occ[i, :, k] = True
    return occ


@dataclass(frozen=True)
class LatticeSpec:
    """Regular grid of touching spheres homogenized into prismatic beams.

    One node per occupied voxel at the sphere centre, beams between
    face-adjacent voxels, base-plane nodes fully fixed.  Stiffness and
    strength of the homogenized member (A, I, J, E, Ry) are user-supplied;
    the defaults approximate a pair of glued hollow balls.  A nonzero
    ``splash_fraction`` injects detached splash clusters and pendant thin
    arms totalling that fraction of all elements, placed with ``seed`` so
    repair runs recover them exactly.
    """

    occupancy: object = None  # bool ndarray, predicate (i,j,k)->bool, or None for a full block
    nx: int = 5
    ny: int = 5
    nz: int = 5
    ball_diameter: float = 47.0  # mm
    E: float = 1500.0  # MPa, homogenized
    nu: float = 0.35
    A: float = 144.51  # mm^2
    I: float = 38234.0  # mm^4
    J: float = 76468.0  # mm^4
    Ry: float = 30.0  # MPa
    density: float = 1.03e-6  # kg/mm^3, shell mass smeared over the beam
    splash_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.splash_fraction <= 0.1):
            raise ValueError("splash_fraction must lie in [0, 0.1]")
        if self.ball_diameter <= 0:
            raise ValueError("ball diameter must be positive")


_FACE_DIRS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


def _resolve_occupancy(spec: LatticeSpec) -> set:
    if spec.occupancy is None:
        occ = full_block_occupancy(spec.nx, spec.ny, spec.nz)
    elif callable(spec.occupancy):
        occ = np.array(
            [
                [[bool(spec.occupancy(i, j, k)) for k in range(spec.nz)] for j in range(spec.ny)]
                for i in range(spec.nx)
            ],
            dtype=bool,
        )
    else:
        occ = np.asarray(spec.occupancy, dtype=bool)
    return {tuple(int(v) for v in idx) for idx in np.argwhere(occ)}


def _neighbors(voxel):
    i, j, k = voxel
    for di, dj, dk in _FACE_DIRS:
        yield (i + di, j + dj, k + dk)


def _largest_component(voxels: set) -> set:
    best = set()
    seen = set()
    for start in sorted(voxels):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            for nb in _neighbors(v):
                if nb in voxels and nb not in seen:
                    seen.add(nb)
                    comp.add(nb)
                    stack.append(nb)
        if len(comp) > len(best):
            best = comp
    return best


def _peel_stable_body(voxels: set, k_base: int, max_degree: int = 2) -> set:
    """Remove voxels the dead-arm peel would take, so injected arms are the
    only pendant material.  Base-plane voxels are protected like supports."""
    body = set(voxels)
    changed = True
    while changed:
        changed = False
        for v in sorted(body):
            if v[2] == k_base:
                continue
            deg = sum(1 for nb in _neighbors(v) if nb in body)
            if deg <= max_degree:
                body.discard(v)
                changed = True
    return body


def _count_cells(voxels: set) -> int:
    return sum(
        1
        for v in voxels
        for d in ((1, 0, 0), (0, 1, 0), (0, 0, 1))
        if (v[0] + d[0], v[1] + d[1], v[2] + d[2]) in voxels
    )


def _inject_defects(body: set, spec: LatticeSpec, rng) -> set:
    """Grow pendant arm chains off the body and detached splash chains until
    the junk reaches splash_fraction of all elements.  Every junk voxel
    touches only its chain predecessor, so removal recovers exactly."""
    occupied = set(body)
    junk_cells = 0
    body_cells = _count_cells(body)
    k_min = min(v[2] for v in body)
    body_list = sorted(body)
    lo = np.array(body_list).min(axis=0) - 5
    hi = np.array(body_list).max(axis=0) + 5
    target = spec.splash_fraction

    def admissible(candidate, predecessor):
        if candidate in occupied or candidate[2] <= k_min:
            return False
        return all(nb not in occupied or nb == predecessor for nb in _neighbors(candidate))

    def grow_chain(start, length):
        chain = []
        cur = start
        for _ in range(length):
            dirs = list(_FACE_DIRS)
            rng.shuffle(dirs)
            for d in dirs:
                nxt = (cur[0] + d[0], cur[1] + d[1], cur[2] + d[2])
                if admissible(nxt, cur):
                    occupied.add(nxt)
                    chain.append(nxt)
                    cur = nxt
                    break
            else:
                break
        return chain

    if target * body_cells < 0.5:  # too small to round to a single element
        return occupied
    make_arm = True
    attempts = 0
    while junk_cells < target * (body_cells + junk_cells) and attempts < 20000:
        attempts += 1
        if make_arm:
            # elongated pendant chains, one ball thick
            anchor = body_list[int(rng.integers(len(body_list)))]
            chain = grow_chain(anchor, int(rng.integers(2, 6)))
            if chain:
                junk_cells += len(chain)  # anchor link plus chain-internal links
                make_arm = False
        else:
            start = tuple(int(rng.integers(lo[d], hi[d])) for d in range(3))
            if not admissible(start, None):
                continue
            occupied.add(start)
            chain = grow_chain(start, int(rng.integers(1, 4)))
            if not chain:  # lone voxel would carry no cells; drop it
                occupied.discard(start)
                continue
            junk_cells += len(chain)
            make_arm = True
    return occupied


def gen_sphere_lattice(spec: LatticeSpec = LatticeSpec()) -> StructuralModel:
    voxels = _resolve_occupancy(spec)
    if not voxels:
        raise ValueError("lattice occupancy is empty")

    if spec.splash_fraction > 0.0:
        body = _largest_component(voxels)
        body = _peel_stable_body(body, min(v[2] for v in body))
        body = _largest_component(body)
        if not body:
            raise ValueError("lattice body vanished while stabilising it")
        rng = np.random.default_rng(spec.seed)
        voxels = _inject_defects(body, spec, rng)
        k_base = min(v[2] for v in body)
    else:
        k_base = min(v[2] for v in voxels)

    order = sorted(voxels)
    index = {v: i for i, v in enumerate(order)}
    d = spec.ball_diameter

    model = StructuralModel(comment="generated - sphere lattice")
    for i, v in enumerate(order):
        p = Point(id=i, coords=(v[0] * d, v[1] * d, v[2] * d))
        if v[2] == k_base:
            p.constraint_mask[:] = True
        model.points.append(p)

    cid = 0
    for v in order:
        for step in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
            nb = (v[0] + step[0], v[1] + step[1], v[2] + step[2])
            if nb in voxels:
                model.cells.append(
                    Cell(id=cid, connectivity=(index[v], index[nb]), cs_id=1, mat_id=1)
                )
                cid += 1

    radius = d / 2.0
    model.cross_sections[1] = CrossSection(
        id=1,
        shape=GenericSection(
            A=spec.A,
            Iy=spec.I,
            Iz=spec.I,
            J=spec.J,
            Wy=spec.I / radius,
            Wz=spec.I / radius,
            Wt=spec.J / radius,
        ),
    )
    model.materials[1] = Material(
        id=1, E=spec.E, nu=spec.nu, density=spec.density, Ry=spec.Ry
    )
    return model
