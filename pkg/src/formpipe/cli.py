"""Command-line pipeline: check, clean, solve and gen subcommands composing
through exchange files.

Exit codes: 0 clean, 1 warnings only, 2 blocking defect or solver failure,
3 unreadable input.  Output files are written atomically (temp file plus
rename), so a failed run never leaves a partial file behind.  Units are
mm / N / MPa throughout.  The FORMPIPE_THREADS environment variable is
reserved for worker control; the current implementation always runs
single-threaded, which keeps runs bit-reproducible.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from dataclasses import dataclass

from . import __version__
from .casegen import (
    CantileverSpec,
    LatticeSpec,
    LeonardoSpec,
    arch_occupancy,
    gen_cantilever,
    gen_leonardo,
    gen_sphere_lattice,
)
from .exchange import ExchangeFormatError, parse_model, write_model, write_results_vtk
from .model import StructuralModel, validate
from .resistance import build_result_set, summarize
from .solver import (
    SolverError,
    assemble,
    expand_displacements,
    reaction_forces,
    recover_end_forces,
    solve_system,
)
from .topology import (
    check_support_reachability,
    merge_duplicate_nodes,
    prune_dead_arms,
    remove_degenerate_cells,
    remove_detached_components,
)

REPORT_VERSION = 1

EXIT_OK = 0
EXIT_WARNINGS = 1
EXIT_DEFECTS = 2
EXIT_UNREADABLE = 3


@dataclass
class PipelineConfig:
    merge_tol: float = 1e-6  # mm
    prune_degree: int = 2
    solver: str = "direct"  # direct | pcg
    pcg_tol: float = 1e-10
    pcg_max_iter: int | None = None
    deform_scale: float = 1.0
    self_weight: bool = True
    report_format: str = "text"  # text | structured

    def __post_init__(self):
        if self.merge_tol <= 0 or self.pcg_tol <= 0 or self.deform_scale < 0:
            raise ValueError("tolerances must be positive")
        if self.solver not in ("direct", "pcg"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.report_format not in ("text", "structured"):
            raise ValueError(f"unknown report format {self.report_format!r}")


def atomic_write(path: str, text: str) -> None:
    """Write via a sibling temp file and rename, so failures leave nothing."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".formpipe-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_clean_pipeline(model: StructuralModel, config: PipelineConfig):
    """merge -> degenerate removal -> detached removal -> dead-arm prune."""
    reports = []
    model, rep = merge_duplicate_nodes(model, tol=config.merge_tol)
    reports.append(("merge_duplicate_nodes", rep))
    model, rep = remove_degenerate_cells(model, tol=config.merge_tol)
    reports.append(("remove_degenerate_cells", rep))
    model, rep = remove_detached_components(model)
    reports.append(("remove_detached_components", rep))
    model, rep = prune_dead_arms(model, max_degree=config.prune_degree)
    reports.append(("prune_dead_arms", rep))
    return model, reports


def run_solve_pipeline(model: StructuralModel, config: PipelineConfig):
    """Assemble, solve, recover forces and post-process into a ResultSet."""
    model.self_weight_enabled = config.self_weight
    system, dofmap = assemble(model)
    u, stats = solve_system(
        system, method=config.solver, tol=config.pcg_tol, max_iter=config.pcg_max_iter
    )
    disp = expand_displacements(dofmap, u)
    forces = recover_end_forces(model, disp)
    reactions = reaction_forces(system, u)
    results = build_result_set(
        model, disp, forces, reactions=reactions, applied_loads=system.applied_loads
    )
    return results, stats


def _emit(lines, stream=None):
    print("\n".join(lines), file=stream or sys.stdout)


def _structured(records) -> list:
    out = [f"formpipe_report_version {REPORT_VERSION}"]
    out.extend(f"{key} {value}" for key, value in records)
    return out


def _clean_records(reports, cells_before, cells_after):
    records = []
    for name, rep in reports:
        records.append((f"{name}.merged_pairs", len(rep.merged_point_pairs)))
        records.append((f"{name}.removed_degenerate", len(rep.removed_degenerate_cells)))
        records.append((f"{name}.removed_duplicates", len(rep.removed_duplicate_cells)))
        records.append((f"{name}.removed_components", len(rep.removed_components)))
        records.append((f"{name}.pruned_points", len(rep.pruned_arm_points)))
        records.append((f"{name}.element_removal_fraction", repr(rep.element_removal_fraction)))
    total = (cells_before - cells_after) / cells_before if cells_before else 0.0
    records.append(("cells_before", cells_before))
    records.append(("cells_after", cells_after))
    records.append(("total_element_removal_fraction", repr(total)))
    return records


def _clean_text(reports, cells_before, cells_after):
    lines = []
    for name, rep in reports:
        if rep.is_empty():
            lines.append(f"{name}: no changes")
            continue
        parts = []
        if rep.merged_point_pairs:
            parts.append(f"{len(rep.merged_point_pairs)} point pair(s) merged")
        if rep.removed_degenerate_cells:
            parts.append(f"{len(rep.removed_degenerate_cells)} degenerate cell(s) removed")
        if rep.removed_duplicate_cells:
            parts.append(f"{len(rep.removed_duplicate_cells)} duplicate cell(s) removed")
        if rep.removed_components:
            sizes = ", ".join(str(n) for n, _ in rep.removed_components)
            parts.append(f"{len(rep.removed_components)} detached component(s) removed (cells: {sizes})")
        if rep.pruned_arm_points:
            parts.append(f"{len(rep.pruned_arm_points)} arm point(s) pruned")
        lines.append(f"{name}: " + "; ".join(parts))
    lines.append(f"cells: {cells_before} -> {cells_after}")
    return lines


def cmd_check(args) -> int:
    try:
        with open(args.input, encoding="utf-8") as handle:
            model = parse_model(handle.read())
    except (OSError, ExchangeFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE

    report = validate(model)
    unsupported = check_support_reachability(model) if report.ok else []
    lines = []
    for finding in report.defects:
        lines.append(f"defect [{finding.kind}]: {finding.message}")
    for finding in report.warnings:
        lines.append(f"warning [{finding.kind}]: {finding.message}")
    for comp in unsupported:
        lines.append(
            f"defect [unsupported-component]: points {comp.point_ids[:8]} carry "
            f"{comp.fixed_dof_count} fixed DOFs (< 6)"
        )
    if not lines:
        lines.append("model is clean")
    _emit(lines)
    if report.defects or unsupported:
        return EXIT_DEFECTS
    if report.warnings:
        return EXIT_WARNINGS
    return EXIT_OK


def cmd_clean(args) -> int:
    try:
        with open(args.input, encoding="utf-8") as handle:
            model = parse_model(handle.read())
    except (OSError, ExchangeFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE

    config = PipelineConfig(merge_tol=args.merge_tol, prune_degree=args.prune_degree,
                            report_format=args.format)
    cells_before = len(model.cells)
    try:
        model, reports = run_clean_pipeline(model, config)
    except (ValueError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEFECTS
    cells_after = len(model.cells)
    atomic_write(args.output, write_model(model))

    if config.report_format == "structured":
        lines = _structured(_clean_records(reports, cells_before, cells_after))
    else:
        lines = _clean_text(reports, cells_before, cells_after)
    _emit(lines)
    if args.report:
        atomic_write(args.report, "\n".join(lines) + "\n")
    return EXIT_OK


def _solve_records(results, stats, config):
    summary = summarize(results)
    return [
        ("solver_method", stats.method),
        ("solver_iterations", stats.iterations),
        ("solver_relative_residual", repr(stats.relative_residual)),
        ("solver_wall_time_s", repr(stats.wall_time)),
        ("threads", os.environ.get("FORMPIPE_THREADS", "1")),
        ("self_weight", int(config.self_weight)),
        ("max_u_el", repr(summary.max_u_el)),
        ("max_total_displacement_mm", repr(summary.max_total_displacement)),
        ("exceeded_count", summary.exceeded_count),
        ("cell_count", summary.cell_count),
    ]


def cmd_solve(args) -> int:
    try:
        with open(args.input, encoding="utf-8") as handle:
            model = parse_model(handle.read())
    except (OSError, ExchangeFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE

    config = PipelineConfig(
        solver=args.solver,
        pcg_tol=args.pcg_tol,
        pcg_max_iter=args.pcg_max_iter,
        deform_scale=args.deform_scale,
        self_weight=not args.no_self_weight,
        report_format=args.format,
    )
    try:
        results, stats = run_solve_pipeline(model, config)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEFECTS
    atomic_write(args.output, write_results_vtk(model, results, config.deform_scale))

    if config.report_format == "structured":
        lines = _structured(_solve_records(results, stats, config))
    else:
        summary = summarize(results)
        lines = [
            f"solved with {stats.method}: {stats.iterations} iteration(s), "
            f"residual {stats.relative_residual:.3e}, {stats.wall_time:.3f} s",
            f"max resistance ratio u_el = {summary.max_u_el:.6g}",
            f"max total displacement = {summary.max_total_displacement:.6g} mm",
            f"elements above the elastic limit: {summary.exceeded_count} of {summary.cell_count}",
        ]
    _emit(lines)
    if args.report:
        atomic_write(args.report, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        if args.case == "cantilever":
            spec = CantileverSpec(
                length=args.length,
                diameter=args.diameter,
                tip_force=args.tip_force,
                n_elements=args.n_elements,
            )
            model = gen_cantilever(spec)
        elif args.case == "leonardo":
            spec = LeonardoSpec(
                span=args.span,
                height=args.height,
                n_segments=args.n_segments,
                variant=args.variant,
            )
            model = gen_leonardo(spec)
        else:
            occupancy = None
            if args.shape == "arch":
                occupancy = arch_occupancy(args.nx, args.ny, args.nz, thickness=args.thickness)
            spec = LatticeSpec(
                occupancy=occupancy,
                nx=args.nx,
                ny=args.ny,
                nz=args.nz,
                splash_fraction=args.splash_fraction,
                seed=args.seed,
            )
            model = gen_sphere_lattice(spec)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEFECTS
    atomic_write(args.output, write_model(model))
    print(f"wrote {args.case} model: {len(model.points)} points, {len(model.cells)} cells")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="formpipe",
        description="Structural exchange-file pipeline (units: mm, N, MPa).",
    )
    parser.add_argument("--version", action="version", version=f"formpipe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="parse, validate and check supports")
    p_check.add_argument("input")
    p_check.set_defaults(func=cmd_check)

    p_clean = sub.add_parser("clean", help="run the topology repair pipeline")
    p_clean.add_argument("input")
    p_clean.add_argument("output")
    p_clean.add_argument("--merge-tol", type=float, default=1e-6, help="merge tolerance in mm")
    p_clean.add_argument("--prune-degree", type=int, default=2,
                         help="max incident cells for dead-arm peeling")
    p_clean.add_argument("--report", default=None, help="also write the report to this path")
    p_clean.add_argument("--format", choices=("text", "structured"), default="text")
    p_clean.set_defaults(func=cmd_clean)

    p_solve = sub.add_parser("solve", help="linear statics plus resistance ratios")
    p_solve.add_argument("input")
    p_solve.add_argument("output", help="legacy VTK results file")
    p_solve.add_argument("--solver", choices=("direct", "pcg"), default="direct")
    p_solve.add_argument("--pcg-tol", type=float, default=1e-10)
    p_solve.add_argument("--pcg-max-iter", type=int, default=None)
    p_solve.add_argument("--deform-scale", type=float, default=1.0)
    p_solve.add_argument("--no-self-weight", action="store_true",
                         help="skip gravity line loads")
    p_solve.add_argument("--report", default=None, help="also write the summary to this path")
    p_solve.add_argument("--format", choices=("text", "structured"), default="text")
    p_solve.set_defaults(func=cmd_solve)

    p_gen = sub.add_parser("gen", help="generate a benchmark model")
    p_gen.add_argument("case", choices=("cantilever", "leonardo", "lattice"))
    p_gen.add_argument("output")
    p_gen.add_argument("--length", type=float, default=1000.0)
    p_gen.add_argument("--diameter", type=float, default=20.0)
    p_gen.add_argument("--tip-force", type=float, default=264.777)
    p_gen.add_argument("--n-elements", type=int, default=1)
    p_gen.add_argument("--span", type=float, default=35000.0)
    p_gen.add_argument("--height", type=float, default=13000.0)
    p_gen.add_argument("--n-segments", type=int, default=7)
    p_gen.add_argument("--variant", choices=("open", "closed", "closed_mobile"),
                       default="closed")
    p_gen.add_argument("--nx", type=int, default=5)
    p_gen.add_argument("--ny", type=int, default=5)
    p_gen.add_argument("--nz", type=int, default=5)
    p_gen.add_argument("--shape", choices=("full", "arch"), default="full")
    p_gen.add_argument("--thickness", type=float, default=3.0)
    p_gen.add_argument("--splash-fraction", type=float, default=0.0)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
