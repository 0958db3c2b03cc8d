import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateEstimateError, EstimationError, QuasiprobError
from .filter import DEFAULT_NODES, build_filter_profile
from .models import GridSpec, PointEstimate, QuadratureDataset, QuasiprobGrid, WidthScanEntry, WidthScanResult
from .pattern import (
    ACCURACY_LIMIT,
    DEFAULT_COEFFICIENTS,
    RETRY_COEFFICIENTS,
    Kernel,
    build_chi_table,
    build_dense_chi,
    dither_offsets,
    evaluate_kernel,
)
from .reduction import mean_and_stderr

log = logging.getLogger(__name__)

WIDTH_MATCH_TOLERANCE = 1e-12


class SampleTable(NamedTuple):
    """Quadratures with the cosine and sine of their dithered phases."""

    x: np.ndarray
    cos_phi: np.ndarray
    sin_phi: np.ndarray


def prepare_samples(dataset: QuadratureDataset, dither_seed: int) -> SampleTable:
    if dataset.n_samples == 0:
        raise EstimationError("dataset has no samples")
    empty = np.flatnonzero(dataset.counts() == 0)
    if empty.size:
        listed = ", ".join(str(int(k)) for k in empty)
        raise EstimationError(f"phase indices without samples: {listed}")
    phases = dataset.sample_phases() + dither_offsets(dataset, dither_seed)
    return SampleTable(x=dataset.x, cos_phi=np.cos(phases), sin_phi=np.sin(phases))


def _check_width(kernel: Kernel, width: Optional[float]) -> None:
    if width is not None and not math.isclose(width, kernel.width, rel_tol=WIDTH_MATCH_TOLERANCE):
        raise EstimationError(f"kernel was built for w={kernel.width:g}, requested w={width:g}")


def _estimate(samples: SampleTable, kernel: Kernel, alpha: complex) -> PointEstimate:
    xi = samples.x - 2.0 * (alpha.real * samples.cos_phi + alpha.imag * samples.sin_phi)
    values = evaluate_kernel(kernel, xi)
    mean, std_err = mean_and_stderr(values)
    return PointEstimate(re=alpha.real, im=alpha.imag, value=mean, std_err=std_err, n=int(values.size))


def estimate_point(
    dataset: QuadratureDataset,
    table: Kernel,
    alpha: complex,
    dither_seed: int,
    *,
    width: Optional[float] = None,
) -> PointEstimate:
    """Sample mean of the dithered pattern function at one phase-space point."""
    _check_width(table, width)
    return _estimate(prepare_samples(dataset, dither_seed), table, complex(alpha))


def _estimate_many(
    samples: SampleTable, kernel: Kernel, alphas: Sequence[complex], threads: Optional[int]
) -> List[PointEstimate]:
    workers = threads or os.cpu_count() or 1
    if workers == 1 or len(alphas) == 1:
        return [_estimate(samples, kernel, a) for a in alphas]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(partial(_estimate, samples, kernel), alphas))


def estimate_grid(
    dataset: QuadratureDataset,
    table: Kernel,
    grid_spec: GridSpec,
    dither_seed: int,
    *,
    threads: Optional[int] = None,
    width: Optional[float] = None,
) -> QuasiprobGrid:
    _check_width(table, width)
    samples = prepare_samples(dataset, dither_seed)
    points = _estimate_many(samples, table, grid_spec.points(), threads)
    log.info("estimated %d grid points at w=%g from %d samples", len(points), table.width, dataset.n_samples)
    return QuasiprobGrid(spec=grid_spec, points=points, width=table.width, dither_seed=dither_seed)


def significance(grid: QuasiprobGrid) -> Tuple[float, complex]:
    """Most negative value / std_err over the grid and where it occurs."""
    if not grid.points:
        raise EstimationError("empty grid")
    std_errs = grid.std_errs()
    if np.any(std_errs <= 0.0):
        raise DegenerateEstimateError("significance needs std_err > 0 at every grid point")
    ratio = grid.values() / std_errs
    idx = int(np.argmin(ratio))
    return float(ratio[idx]), grid.points[idx].alpha


def scan_width(
    dataset: QuadratureDataset,
    widths: Sequence[float],
    grid_spec: GridSpec,
    dither_seed: int,
    *,
    n_nodes: int = DEFAULT_NODES,
    n_coeff: int = DEFAULT_COEFFICIENTS,
    retry_n_coeff: int = RETRY_COEFFICIENTS,
    accuracy_limit: float = ACCURACY_LIMIT,
    fast_kernel: bool = False,
    threads: Optional[int] = None,
) -> WidthScanResult:
    """Significance per filter width; a width that fails to build is recorded and skipped."""
    samples = prepare_samples(dataset, dither_seed)
    alphas = grid_spec.points()
    entries: List[WidthScanEntry] = []
    for w in widths:
        try:
            profile = build_filter_profile(w, n_nodes)
            table = build_chi_table(profile, n_coeff, retry_n_coeff=retry_n_coeff, accuracy_limit=accuracy_limit)
            kernel: Kernel = build_dense_chi(table) if fast_kernel else table
            grid = QuasiprobGrid(
                spec=grid_spec,
                points=_estimate_many(samples, kernel, alphas, threads),
                width=table.width,
                dither_seed=dither_seed,
            )
            sigma, argmin = significance(grid)
        except (QuasiprobError, ValueError) as exc:
            log.warning("width %g skipped: %s", w, exc)
            entries.append(WidthScanEntry(width=w, note=str(exc)))
            continue
        log.info("width %g: sigma=%.3f at %s", w, sigma, argmin)
        entries.append(WidthScanEntry(width=w, sigma=sigma, argmin_re=argmin.real, argmin_im=argmin.imag))
    return WidthScanResult.from_entries(entries)


__all__ = [
    "SampleTable",
    "prepare_samples",
    "estimate_point",
    "estimate_grid",
    "significance",
    "scan_width",
]
