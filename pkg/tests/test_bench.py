"""Refinement table checks against the frozen reference energies."""

import csv
import io

import pytest

from deformlab.bench import (
    BENCH_FOLD_ANGLE,
    BENCH_SHEET_WIDTH,
    CSV_HEADER,
    DEFAULT_LEVELS,
    BenchRow,
    checks_for,
    cylinder_checks,
    fold_checks,
    render_report,
    rows_to_csv,
    rows_to_markdown,
    run_case,
    run_cylinder_table,
    run_fold_table,
    validate_levels,
)
from deformlab.mesh import generate_fold, generate_grid
from deformlab.solver import fitted_stretch_energy

# Frozen reference energies for the folded and rolled 100 x 100 sheet;
# the spoke and spoke-rim columns are binding at 2%, bending at x/÷ 2.
REF_FOLD_SPOKE = {10: 2343.1, 20: 1171.5, 40: 585.7, 80: 292.8, 160: 146.4}
REF_FOLD_SPOKE_RIM = {10: 4448.3, 20: 2283.6, 40: 1156.6, 80: 582.1,
                      160: 291.9}
REF_FOLD_BENDING = {10: 24.2, 20: 50.9, 40: 104.2, 80: 210.9, 160: 424.2}


@pytest.fixture(scope="module")
def fold_rows():
    return run_fold_table()


@pytest.fixture(scope="module")
def cylinder_rows():
    return run_cylinder_table()


class TestFoldTable:
    def test_spoke_matches_reference(self, fold_rows):
        for row in fold_rows:
            assert row.spoke == pytest.approx(
                REF_FOLD_SPOKE[row.n], rel=0.02)

    def test_spoke_rim_matches_reference(self, fold_rows):
        for row in fold_rows:
            assert row.spoke_rim == pytest.approx(
                REF_FOLD_SPOKE_RIM[row.n], rel=0.02)

    def test_bending_within_factor_two(self, fold_rows):
        for row in fold_rows:
            ref = REF_FOLD_BENDING[row.n]
            assert ref / 2.0 <= row.bending <= ref * 2.0

    def test_triangle_counts(self, fold_rows):
        for row in fold_rows:
            assert row.triangles == 2 * row.n * row.n

    def test_adjacent_ratios(self, fold_rows):
        for a, b in zip(fold_rows, fold_rows[1:]):
            assert 0.475 <= b.spoke / a.spoke <= 0.525
            assert 0.475 <= b.spoke_rim / a.spoke_rim <= 0.525
            assert 1.8 <= b.bending / a.bending <= 2.2

    def test_checks_all_pass(self, fold_rows):
        assert all(c.ok for c in fold_checks(fold_rows))

    def test_fold_stretch_vanishes(self):
        # the fold is an isometry, so the fitted stretch energy is zero at
        # every level up to roundoff
        for n in DEFAULT_LEVELS[:3]:
            mesh = generate_grid(n, BENCH_SHEET_WIDTH)
            state = generate_fold(n, BENCH_FOLD_ANGLE, BENCH_SHEET_WIDTH)
            assert fitted_stretch_energy(mesh, state) <= 1e-8


class TestCylinderTable:
    def test_quarter_ratios(self, cylinder_rows):
        checks = cylinder_checks(cylinder_rows)
        ratio_checks = [c for c in checks if c.target == 0.25]
        # first adjacent pair is excluded: the law is asymptotic
        assert len(ratio_checks) == 2 * (len(cylinder_rows) - 2)
        assert all(c.ok for c in ratio_checks)

    def test_bending_plateau(self, cylinder_rows):
        plateau = [c for c in cylinder_checks(cylinder_rows)
                   if c.target == 1.0]
        assert len(plateau) == 1
        assert plateau[0].ok

    def test_triangle_counts(self, cylinder_rows):
        for row in cylinder_rows:
            assert row.triangles == 2 * row.n * row.n


class TestLevelValidation:
    def test_odd_level_rejected(self):
        with pytest.raises(ValueError, match="even"):
            validate_levels([10, 15])

    def test_guard_exceeded(self):
        with pytest.raises(ValueError, match="guard"):
            validate_levels([1280])

    def test_force_lifts_guard(self):
        validate_levels([1280], force=True)

    def test_table_runners_validate(self):
        with pytest.raises(ValueError):
            run_fold_table([7])
        with pytest.raises(ValueError):
            run_cylinder_table([700])

    def test_unknown_case(self):
        with pytest.raises(ValueError, match="unknown"):
            run_case("torus")
        with pytest.raises(ValueError, match="unknown"):
            checks_for("torus", [])


class TestRendering:
    def test_csv_header_and_shape(self, fold_rows):
        text = rows_to_csv(fold_rows)
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + len(fold_rows)
        parsed = list(csv.DictReader(io.StringIO(text)))
        assert [int(r["n"]) for r in parsed] == [r.n for r in fold_rows]
        for rec, row in zip(parsed, fold_rows):
            assert float(rec["spoke"]) == pytest.approx(row.spoke, rel=1e-5)
            assert float(rec["spoke_rim"]) == pytest.approx(
                row.spoke_rim, rel=1e-5)
            assert float(rec["bending"]) == pytest.approx(
                row.bending, rel=1e-5)

    def test_csv_six_significant_digits(self):
        rows = [BenchRow(n=10, triangles=200, spoke=1234.56789,
                         spoke_rim=0.000123456789, bending=98765432.1)]
        body = rows_to_csv(rows).strip().split("\n")[1]
        assert body == "10,200,1234.57,0.000123457,9.87654e+07"

    def test_markdown_table(self, fold_rows):
        text = rows_to_markdown(fold_rows)
        lines = text.strip().split("\n")
        assert lines[0].startswith("| n | Triangles |")
        assert len(lines) == 2 + len(fold_rows)
        assert all(line.startswith("|") for line in lines)

    def test_report_mentions_convention_and_status(self, fold_rows):
        checks = fold_checks(fold_rows)
        report = render_report("fold", fold_rows, checks)
        assert "one-third-area" in report
        assert "4/3" in report
        assert report.count("ok") >= len(checks)
        assert "FAIL" not in report