import math

import pytest

from quasiprob.errors import DatasetFormatError, GridMismatchError
from quasiprob.models import GridSpec, PointEstimate, QuasiprobGrid, WidthScanEntry, WidthScanResult
from quasiprob.reporter import (
    build_markdown_report,
    compare_grids,
    read_grid_csv,
    write_grid_csv,
    write_oracle_csv,
    write_scan_csv,
)


def _grid():
    spec = GridSpec.parse("re:0,0.1,0.1")
    points = [
        PointEstimate(re=0.0, im=0.0, value=0.1, std_err=0.01, n=100),
        PointEstimate(re=0.1, im=0.0, value=-0.05, std_err=0.01, n=100),
    ]
    return QuasiprobGrid(spec=spec, points=points, width=1.3, dither_seed=0)


def test_grid_csv_uses_full_precision(tmp_path):
    path = write_grid_csv(tmp_path / "g.csv", _grid())
    lines = path.read_text().splitlines()
    assert lines[0] == "re_alpha,im_alpha,p,std_err"
    assert lines[1] == "0,0,0.10000000000000001,0.01"
    rows = read_grid_csv(path)
    assert rows[(0.1, 0.0)] == (-0.05, 0.01)


def test_compare_counts_agreement(tmp_path):
    sampled = read_grid_csv(write_grid_csv(tmp_path / "s.csv", _grid()))
    oracle = read_grid_csv(write_oracle_csv(tmp_path / "o.csv", [(0j, 0.1), (0.1 + 0j, 0.0)]))
    report = compare_grids(sampled, oracle)
    assert [p.z for p in report.points] == [pytest.approx(0.0), pytest.approx(-5.0)]
    assert report.fraction_within == 0.5
    assert not report.passed
    assert report.max_abs_z == pytest.approx(5.0)
    assert "Outliers" in build_markdown_report(report)


def test_oracle_self_compare_passes(tmp_path):
    path = write_oracle_csv(tmp_path / "o.csv", [(0j, 0.1), (0.5j, -0.02)], systematic=[0.0, 1e-5])
    assert path.read_text().splitlines()[0].endswith(",systematic_error")
    rows = read_grid_csv(path)
    report = compare_grids(rows, rows)
    assert report.passed
    assert all(p.z == 0.0 for p in report.points)


def test_undefined_z_counts_as_outside(tmp_path):
    a = read_grid_csv(write_oracle_csv(tmp_path / "a.csv", [(0j, 0.1)]))
    b = read_grid_csv(write_oracle_csv(tmp_path / "b.csv", [(0j, 0.2)]))
    report = compare_grids(a, b)
    assert report.points[0].z is None
    assert report.fraction_within == 0.0
    assert report.max_abs_z is None


def test_mismatched_grids(tmp_path):
    a = read_grid_csv(write_oracle_csv(tmp_path / "a.csv", [(0j, 0.1), (0.1 + 0j, 0.1)]))
    b = read_grid_csv(write_oracle_csv(tmp_path / "b.csv", [(0j, 0.1)]))
    with pytest.raises(GridMismatchError) as info:
        compare_grids(a, b)
    assert info.value.missing == [(0.1, 0.0)]


def test_scan_csv_records_failures(tmp_path):
    result = WidthScanResult.from_entries(
        [WidthScanEntry(width=1.3, sigma=-20.0, argmin_re=0.9, argmin_im=0.0), WidthScanEntry(width=2.0, note="kernel gate")]
    )
    lines = (write_scan_csv(tmp_path / "scan.csv", result)).read_text().splitlines()
    assert lines[0] == "w,sigma,argmin_re,argmin_im,note"
    assert lines[2] == "2,nan,,,kernel gate"
    assert math.isclose(float(lines[1].split(",")[1]), -20.0)


def test_bad_grid_file(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("re_alpha,im_alpha,p,std_err\n0,0,x,0\n")
    with pytest.raises(DatasetFormatError):
        read_grid_csv(path)
