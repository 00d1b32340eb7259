"""Post-processing of the mechanical response into the designer-facing
cross-section resistance ratio and its binary classification.

For a beam fibre with axial stress sigma and torsional shear tau the
equivalent stress is sqrt(sigma^2 + 3 tau^2) (deviatoric-invariant yield
measure); the resistance ratio is that equivalent stress over the yield
stress.  Axial stress superposes conservatively as |N|/A + |My|/Wy + |Mz|/Wz
evaluated at both element ends; transverse shear is neglected (negligible
for slender members).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import StructuralModel

ELASTIC_LIMIT = 1.0


@dataclass(frozen=True)
class StressState:
    sigma_axial: float  # MPa
    tau: float  # MPa
    sigma_eq: float  # MPa
    J2: float  # MPa^2


def stress_state(end_force_row, props) -> StressState:
    """Stress measures for one element end (N, Vy, Vz, T, My, Mz)."""
    N, _, _, T, My, Mz = (float(v) for v in end_force_row)
    sigma = abs(N) / props.A + abs(My) / props.Wy + abs(Mz) / props.Wz
    tau = abs(T) / props.Wt
    sigma_eq = math.sqrt(sigma**2 + 3.0 * tau**2)
    return StressState(sigma_axial=sigma, tau=tau, sigma_eq=sigma_eq, J2=sigma_eq**2 / 3.0)


def resistance_ratio(end_forces, props, mat) -> float:
    """Max over both element ends of sigma_eq / Ry."""
    if mat.Ry <= 0:
        raise ValueError("material yield stress must be positive")
    ef = np.asarray(end_forces, dtype=float).reshape(2, 6)
    return max(stress_state(row, props).sigma_eq for row in ef) / mat.Ry


def classify(u_el: float, threshold: float = ELASTIC_LIMIT) -> str:
    """'exceeded' for ratios strictly above the threshold, else 'ok'."""
    if u_el < 0:
        raise ValueError("resistance ratio cannot be negative")
    return "exceeded" if u_el > threshold else "ok"


@dataclass(eq=False)
class ResultSet:
    """Solved response: per-point displacements/rotations, per-cell local end
    forces and resistance ratios, reactions and the applied-load record."""

    displacements: np.ndarray  # (n_points, 6), mm / rad
    end_forces: np.ndarray  # (n_cells, 2, 6), local (N, Vy, Vz, T, My, Mz)
    u_el: np.ndarray  # (n_cells,)
    exceeded: np.ndarray  # (n_cells,) bool
    max_u_el: float
    max_total_displacement: float
    reactions: np.ndarray  # (n_points, 6)
    applied_loads: np.ndarray  # (n_points, 6)


def build_result_set(
    model: StructuralModel,
    displacements: np.ndarray,
    end_forces: np.ndarray,
    reactions: np.ndarray | None = None,
    applied_loads: np.ndarray | None = None,
) -> ResultSet:
    n = len(model.points)
    m = len(model.cells)
    disp = np.asarray(displacements, dtype=float).reshape(n, 6)
    ef = np.asarray(end_forces, dtype=float).reshape(m, 2, 6)
    u_el = np.zeros(m)
    for i, cell in enumerate(model.cells):
        props = model.cross_sections[cell.cs_id].properties
        mat = model.materials[cell.mat_id]
        u_el[i] = resistance_ratio(ef[i], props, mat)
    exceeded = u_el > ELASTIC_LIMIT
    if n:
        total = np.linalg.norm(disp[:, :3], axis=1)
        max_disp = float(np.max(total))
    else:
        max_disp = 0.0
    return ResultSet(
        displacements=disp,
        end_forces=ef,
        u_el=u_el,
        exceeded=exceeded,
        max_u_el=float(np.max(u_el)) if m else 0.0,
        max_total_displacement=max_disp,
        reactions=np.zeros((n, 6)) if reactions is None else np.asarray(reactions, dtype=float),
        applied_loads=np.zeros((n, 6)) if applied_loads is None else np.asarray(applied_loads, dtype=float),
    )


@dataclass(frozen=True)
class Summary:
    max_u_el: float
    max_total_displacement: float
    exceeded_count: int
    cell_count: int


def summarize(results: ResultSet) -> Summary:
    """Headline numbers: peak ratio, peak displacement magnitude, exceedances."""
    return Summary(
        max_u_el=results.max_u_el,
        max_total_displacement=results.max_total_displacement,
        exceeded_count=int(np.count_nonzero(results.exceeded)),
        cell_count=len(results.u_el),
    )


def deformed_geometry(model: StructuralModel, displacements, scale: float) -> np.ndarray:
    """Point coordinates displaced by scale times the translation field."""
    if not np.isfinite(scale):
        raise ValueError("deformation scale must be finite")
    disp = np.asarray(displacements, dtype=float)
    coords = model.coords_array()
    if disp.shape != (coords.shape[0], 6):
        raise ValueError("displacement array does not match the point count")
    return coords + scale * disp[:, :3]
