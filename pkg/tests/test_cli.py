import pytest

import formpipe as fp
from formpipe.cli import PipelineConfig, main, run_clean_pipeline, run_solve_pipeline


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_structured(text):
    records = {}
    for line in text.strip().splitlines():
        key, _, value = line.partition(" ")
        records[key] = value
    return records


@pytest.fixture
def cantilever_file(tmp_path, capsys):
    path = tmp_path / "cantilever.vtp"
    code, _, _ = run(capsys, "gen", "cantilever", str(path))
    assert code == 0
    return path


class TestCheck:
    def test_generated_cantilever_clean(self, capsys, cantilever_file):
        code, out, err = run(capsys, "check", str(cantilever_file))
        assert code == 0
        assert "clean" in out
        assert err == ""

    def test_reference_fixture_warns_on_unused_catalog(self, capsys, tmp_path, reference_cantilever_text):
        path = tmp_path / "reference.vtp"
        path.write_text(reference_cantilever_text)
        code, out, _ = run(capsys, "check", str(path))
        assert code == 1
        assert "unreferenced-catalog" in out

    def test_truncated_file_unreadable(self, capsys, tmp_path, reference_cantilever_text):
        path = tmp_path / "broken.vtp"
        path.write_text(reference_cantilever_text[:200])
        code, _, err = run(capsys, "check", str(path))
        assert code == 3
        assert "error" in err

    def test_floating_component_blocks(self, capsys, tmp_path):
        model = fp.gen_cantilever()
        model.points.append(fp.Point(id=2, coords=(0, 500.0, 0)))
        model.points.append(fp.Point(id=3, coords=(0, 500.0, 100.0)))
        model.cells.append(fp.Cell(id=1, connectivity=(2, 3), cs_id=2, mat_id=1))
        path = tmp_path / "floating.vtp"
        path.write_text(fp.write_model(model))
        code, out, _ = run(capsys, "check", str(path))
        assert code == 2
        assert "unsupported-component" in out


class TestClean:
    def test_duplicate_node_fixture(self, capsys, tmp_path):
        model = fp.gen_cantilever()
        # a duplicated tip node picked up by one extra supported strut
        model.points.append(fp.Point(id=2, coords=(1000.0, 0.0, 1e-9)))
        model.points.append(fp.Point(id=3, coords=(1000.0, 0.0, 500.0)))
        model.points[3].constraint_mask[:] = True
        model.cells.append(fp.Cell(id=1, connectivity=(2, 3), cs_id=2, mat_id=1))
        src = tmp_path / "dup.vtp"
        dst = tmp_path / "cleaned.vtp"
        src.write_text(fp.write_model(model))
        code, out, _ = run(capsys, "clean", str(src), str(dst), "--format", "structured")
        assert code == 0
        records = parse_structured(out)
        assert records["formpipe_report_version"] == "1"
        assert records["merge_duplicate_nodes.merged_pairs"] == "1"
        cleaned = fp.parse_model(dst.read_text())
        assert len(cleaned.points) == 3

    def test_already_clean_round_trip_byte_identical(self, capsys, tmp_path, cantilever_file):
        out1 = tmp_path / "c1.vtp"
        out2 = tmp_path / "c2.vtp"
        code, text, _ = run(capsys, "clean", str(cantilever_file), str(out1))
        assert code == 0
        assert "no changes" in text
        code, _, _ = run(capsys, "clean", str(out1), str(out2))
        assert code == 0
        assert out1.read_text() == out2.read_text()
        assert out1.read_text() == cantilever_file.read_text()

    def test_splash_lattice_report(self, capsys, tmp_path):
        occ = fp.arch_occupancy(24, 3, 12, thickness=3.0)
        dirty = fp.gen_sphere_lattice(
            fp.LatticeSpec(occupancy=occ, splash_fraction=0.02, seed=1)
        )
        clean = fp.gen_sphere_lattice(
            fp.LatticeSpec(occupancy=occ, splash_fraction=0.0, seed=1)
        )
        src = tmp_path / "lattice.vtp"
        dst = tmp_path / "lattice_clean.vtp"
        src.write_text(fp.write_model(dirty))
        code, out, _ = run(capsys, "clean", str(src), str(dst), "--format", "structured")
        assert code == 0
        records = parse_structured(out)
        total = float(records["total_element_removal_fraction"])
        injected = (len(dirty.cells) - fp.gen_sphere_lattice(
            fp.LatticeSpec(occupancy=occ, splash_fraction=1e-12, seed=1)
        ).cells.__len__()) / len(dirty.cells)
        assert total == pytest.approx(injected, abs=0.005)

    def test_report_file_written(self, capsys, tmp_path, cantilever_file):
        dst = tmp_path / "out.vtp"
        report = tmp_path / "report.txt"
        code, out, _ = run(
            capsys, "clean", str(cantilever_file), str(dst), "--report", str(report)
        )
        assert code == 0
        assert report.read_text().strip() in out.strip()


class TestSolve:
    def test_cantilever_summary(self, capsys, tmp_path, cantilever_file):
        results = tmp_path / "results.vtk"
        code, out, _ = run(
            capsys, "solve", str(cantilever_file), str(results), "--format", "structured"
        )
        assert code == 0
        records = parse_structured(out)
        assert float(records["max_u_el"]) == pytest.approx(1.175, abs=0.005)
        assert records["solver_method"] == "direct"
        text = results.read_text()
        assert text.startswith("# vtk DataFile Version 3.0")
        assert "resistance_ratio" in text

    def test_pcg_matches_direct(self, capsys, tmp_path, cantilever_file):
        out_d = tmp_path / "d.vtk"
        out_p = tmp_path / "p.vtk"
        _, text_d, _ = run(capsys, "solve", str(cantilever_file), str(out_d),
                           "--format", "structured")
        _, text_p, _ = run(capsys, "solve", str(cantilever_file), str(out_p),
                           "--solver", "pcg", "--format", "structured")
        rec_d = parse_structured(text_d)
        rec_p = parse_structured(text_p)
        assert float(rec_p["max_u_el"]) == pytest.approx(float(rec_d["max_u_el"]), rel=1e-6)
        assert rec_p["solver_method"] == "pcg-ichol"

    def test_mechanism_exit_code_and_no_partial_output(self, capsys, tmp_path):
        model = fp.StructuralModel(self_weight_enabled=False)
        model.points = [
            fp.Point(id=0, coords=(0, 0, 0)),
            fp.Point(id=1, coords=(1000, 0, 0)),
            fp.Point(id=2, coords=(2000, 0, 0)),
        ]
        model.points[0].constraint_mask[:] = True
        model.points[2].constraint_mask[:] = True
        for i in range(2):
            model.cells.append(
                fp.Cell(id=i, connectivity=(i, i + 1), cs_id=1, mat_id=1, kind=fp.TRUSS_LINE)
            )
        model.cross_sections[1] = fp.CrossSection(id=1, shape=fp.Circle(diameter=20.0))
        model.materials[1] = fp.Material(id=1, E=210e3, nu=0.2)
        model.bcs[1] = fp.BoundaryConditionEntry(id=1, components=(1e3, 0, 0, 0, 0, 0))
        model.points[1].bc_id = 1
        src = tmp_path / "mechanism.vtp"
        dst = tmp_path / "never.vtk"
        src.write_text(fp.write_model(model))
        code, _, err = run(capsys, "solve", str(src), str(dst), "--no-self-weight")
        assert code == 2
        assert "mechanism" in err
        assert not dst.exists()

    def test_unreadable_input(self, capsys, tmp_path):
        src = tmp_path / "junk.vtp"
        src.write_text("not xml at all")
        code, _, err = run(capsys, "solve", str(src), str(tmp_path / "o.vtk"))
        assert code == 3


class TestGen:
    def test_lattice_counts(self, capsys, tmp_path):
        path = tmp_path / "lat.vtp"
        code, out, _ = run(capsys, "gen", "lattice", str(path),
                           "--nx", "5", "--ny", "5", "--nz", "5")
        assert code == 0
        model = fp.parse_model(path.read_text())
        assert len(model.points) == 125

    def test_leonardo_variant_ordering_via_files(self, capsys, tmp_path):
        disps = {}
        for variant in ("open", "closed"):
            src = tmp_path / f"{variant}.vtp"
            dst = tmp_path / f"{variant}.vtk"
            run(capsys, "gen", "leonardo", str(src), "--variant", variant)
            _, out, _ = run(capsys, "solve", str(src), str(dst), "--format", "structured")
            disps[variant] = float(parse_structured(out)["max_total_displacement_mm"])
        assert disps["open"] > disps["closed"]

    def test_bad_spec_exit_code(self, capsys, tmp_path):
        code, _, err = run(capsys, "gen", "leonardo", str(tmp_path / "x.vtp"),
                           "--n-segments", "2")
        assert code == 2
        assert "error" in err


class TestComposition:
    def test_file_chain_matches_in_process(self, capsys, tmp_path):
        src = tmp_path / "model.vtp"
        cleaned = tmp_path / "clean.vtp"
        results = tmp_path / "results.vtk"
        occ = fp.arch_occupancy(20, 3, 10, thickness=3.0)
        spec = fp.LatticeSpec(occupancy=occ, splash_fraction=0.02, seed=2)

        model = fp.gen_sphere_lattice(spec)
        src.write_text(fp.write_model(model))
        run(capsys, "clean", str(src), str(cleaned))
        code, out, _ = run(capsys, "solve", str(cleaned), str(results),
                           "--format", "structured")
        assert code == 0
        file_records = parse_structured(out)

        in_proc_model, _ = run_clean_pipeline(fp.gen_sphere_lattice(spec), PipelineConfig())
        in_results, _ = run_solve_pipeline(in_proc_model, PipelineConfig())
        assert float(file_records["max_u_el"]) == in_results.max_u_el
        assert float(file_records["max_total_displacement_mm"]) == pytest.approx(
            in_results.max_total_displacement, rel=0, abs=0
        )

    def test_stdout_reports_nothing_on_stderr_when_ok(self, capsys, cantilever_file, tmp_path):
        code, out, err = run(capsys, "solve", str(cantilever_file), str(tmp_path / "r.vtk"))
        assert code == 0
        assert err == ""
        assert out
