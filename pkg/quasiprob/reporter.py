import csv
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DatasetFormatError, GridMismatchError
from .models import ComparePoint, CompareReport, FilterProfile, QuasiprobGrid, WidthScanResult

GRID_HEADER = ["re_alpha", "im_alpha", "p", "std_err"]
SCAN_HEADER = ["w", "sigma", "argmin_re", "argmin_im", "note"]
PROFILE_HEADER = ["b", "omega"]
KERNEL_HEADER = ["xi", "chi"]
KEY_DECIMALS = 9

PathLike = Union[str, Path]
GridRows = Dict[Tuple[float, float], Tuple[float, float]]


def format_float(value: Union[None, float, str]) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if math.isnan(value):
        return "nan"
    return "%.17g" % value


def _write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Union[None, float, str]]]) -> Path:
    p = Path(path)
    with p.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) for v in row])
    return p


def write_grid_csv(path: PathLike, grid: QuasiprobGrid) -> Path:
    return _write_rows(path, GRID_HEADER, ((p.re, p.im, p.value, p.std_err) for p in grid.points))


def write_oracle_csv(
    path: PathLike,
    points: Sequence[Tuple[complex, float]],
    systematic: Optional[Sequence[float]] = None,
) -> Path:
    """Oracle values in the grid schema, std_err fixed to 0, optionally with a systematic_error column."""
    if systematic is None:
        return _write_rows(path, GRID_HEADER, ((a.real, a.imag, v, 0.0) for a, v in points))
    header = GRID_HEADER + ["systematic_error"]
    return _write_rows(path, header, ((a.real, a.imag, v, 0.0, s) for (a, v), s in zip(points, systematic)))


def write_scan_csv(path: PathLike, result: WidthScanResult) -> Path:
    return _write_rows(path, SCAN_HEADER, ((e.width, e.sigma, e.argmin_re, e.argmin_im, e.note) for e in result.entries))


def write_profile_csv(path: PathLike, profile: FilterProfile) -> Path:
    return _write_rows(path, PROFILE_HEADER, zip(profile.nodes.tolist(), profile.values.tolist()))


def write_kernel_csv(path: PathLike, xi: np.ndarray, values: np.ndarray) -> Path:
    return _write_rows(path, KERNEL_HEADER, zip(np.asarray(xi).tolist(), np.asarray(values).tolist()))


def grid_key(re: float, im: float) -> Tuple[float, float]:
    return (round(re, KEY_DECIMALS) + 0.0, round(im, KEY_DECIMALS) + 0.0)


def read_grid_csv(path: PathLike) -> GridRows:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Grid file not found: {path}")
    rows: GridRows = {}
    with p.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[: len(GRID_HEADER)] != GRID_HEADER:
            raise DatasetFormatError(f"{p.name}: expected header {','.join(GRID_HEADER)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetFormatError(f"{p.name}: expected {len(header)} fields", lineno)
            try:
                re, im, value, std_err = (float(v) for v in row[: len(GRID_HEADER)])
            except ValueError as exc:
                raise DatasetFormatError(f"{p.name}: non-numeric row", lineno) from exc
            rows[grid_key(re, im)] = (value, std_err)
    return rows


def compare_grids(sampled: GridRows, oracle: GridRows, threshold: float = 4.0) -> CompareReport:
    """z-scores (sampled - oracle) / std_err on the common grid; the two grids must coincide."""
    missing = sorted(set(sampled) ^ set(oracle))
    if missing:
        raise GridMismatchError(missing)
    points: List[ComparePoint] = []
    within = 0
    for key in sorted(sampled):
        value, std_err = sampled[key]
        reference = oracle[key][0]
        diff = value - reference
        z: Optional[float]
        if std_err > 0:
            z = diff / std_err
        else:
            z = 0.0 if diff == 0 else None
        if z is not None and abs(z) <= threshold:
            within += 1
        points.append(ComparePoint(re=key[0], im=key[1], sampled=value, oracle=reference, std_err=std_err, z=z))
    defined = [abs(p.z) for p in points if p.z is not None]
    return CompareReport(
        threshold=threshold,
        points=points,
        fraction_within=within / len(points) if points else 0.0,
        max_abs_z=max(defined) if defined else None,
    )


def build_markdown_report(report: CompareReport, limit: int = 20) -> str:
    lines: List[str] = []
    lines.append("# Quasiprobability comparison")
    lines.append("")
    lines.append(f"- Grid points: {len(report.points)}")
    lines.append(f"- Within {report.threshold:g} standard errors: {report.fraction_within:.1%}")
    lines.append(f"- Max |z|: {report.max_abs_z:.3f}" if report.max_abs_z is not None else "- Max |z|: n/a")
    lines.append(f"- Decision: {'pass' if report.passed else 'fail'}")
    lines.append("")
    outliers = sorted(
        (p for p in report.points if p.z is None or abs(p.z) > report.threshold),
        key=lambda p: -math.inf if p.z is None else -abs(p.z),
    )
    if outliers:
        lines.append("## Outliers")
        lines.append("")
        lines.append("| re | im | sampled | oracle | std_err | z |")
        lines.append("|---:|---:|---:|---:|---:|---:|")
        for p in outliers[:limit]:
            z = "undefined" if p.z is None else f"{p.z:.2f}"
            lines.append(f"| {p.re:g} | {p.im:g} | {p.sampled:.6g} | {p.oracle:.6g} | {p.std_err:.3g} | {z} |")
        if len(outliers) > limit:
            lines.append(f"\n... {len(outliers) - limit} more")
        lines.append("")
    return "\n".join(lines)


def kernel_samples(span: float, step: float) -> np.ndarray:
    n = int(math.floor(2.0 * span / step + 1e-9)) + 1
    return -span + step * np.arange(n)


__all__ = [
    "GRID_HEADER",
    "SCAN_HEADER",
    "format_float",
    "write_grid_csv",
    "write_oracle_csv",
    "write_scan_csv",
    "write_profile_csv",
    "write_kernel_csv",
    "grid_key",
    "read_grid_csv",
    "compare_grids",
    "build_markdown_report",
    "kernel_samples",
]
