import math

import numpy as np
import pytest

from quasiprob.errors import DegenerateEstimateError, EstimationError, PhaseGridError
from quasiprob.estimator import estimate_grid, estimate_point, scan_width, significance
from quasiprob.gaussian_sim import simulate_quadratures
from quasiprob.models import (
    GaussianStateSpec,
    GridSpec,
    PhaseGrid,
    PointEstimate,
    QuadratureDataset,
    QuasiprobGrid,
    WidthScanEntry,
    WidthScanResult,
)
from quasiprob.oracle import oracle_discrete_phase
from quasiprob.pattern import dither_offsets, pattern_value

RE_AXIS = GridSpec.parse("re:0,2,0.1")


@pytest.fixture(scope="module")
def squeezed_axis(squeezed_data, dense13):
    return estimate_grid(squeezed_data, dense13, GridSpec.parse("re:-3,3,0.05"), 0)


def test_point_estimate_is_mean_of_dithered_pattern_values(vacuum, table13):
    data = simulate_quadratures(vacuum, PhaseGrid.uniform(3), 50, seed=1)
    alpha = 0.4 - 0.2j
    phases = data.sample_phases() + dither_offsets(data, 9)
    values = pattern_value(table13, data.x, phases, alpha)
    est = estimate_point(data, table13, alpha, 9)
    assert est.n == data.n_samples == 150
    assert est.value == pytest.approx(values.mean(), abs=1e-13)
    assert est.std_err == pytest.approx(values.std(ddof=1) / math.sqrt(150), rel=1e-10)
    assert est.alpha == alpha


def test_one_point_grid_matches_estimate_point(squeezed_data, dense13):
    grid = estimate_grid(squeezed_data, dense13, GridSpec.parse("re:0.9,0.9,0.1"), 3)
    assert grid.points == [estimate_point(squeezed_data, dense13, 0.9, 3)]


def test_grid_is_deterministic_across_threads(squeezed_data, dense13):
    spec = GridSpec.parse("re:-1,1,0.25,im:-0.5,0.5,0.5")
    one = estimate_grid(squeezed_data, dense13, spec, 1, threads=1)
    many = estimate_grid(squeezed_data, dense13, spec, 1, threads=8)
    again = estimate_grid(squeezed_data, dense13, spec, 1, threads=3)
    assert one == many == again


def test_empty_dataset_rejected(table13):
    empty = QuadratureDataset(phase_grid=PhaseGrid.uniform(3), phase_index=[], x=[])
    with pytest.raises(EstimationError):
        estimate_point(empty, table13, 0.5, 0)


def test_width_mismatch_rejected(squeezed_data, table13):
    with pytest.raises(EstimationError):
        estimate_point(squeezed_data, table13, 0.5, 0, width=1.1)


def test_non_equispaced_dataset_rejected(table13):
    data = QuadratureDataset(phase_grid=PhaseGrid(phases=(0.0, 1.0)), phase_index=[0, 1], x=[0.0, 0.1])
    with pytest.raises(PhaseGridError):
        estimate_point(data, table13, 0.5, 0)


def _assert_minimum_matches_oracle(grid, state, profile, max_radius=1.0):
    idx = int(np.argmin(grid.values()))
    lowest = grid.points[idx]
    assert 0.8 <= abs(lowest.alpha) <= max_radius
    reference = oracle_discrete_phase(state, lowest.alpha, 1.3, 21, profile=profile)
    assert abs(lowest.value - reference) <= 3 * lowest.std_err
    return lowest


def test_squeezed_minimum_and_significance(squeezed_axis, squeezed, profile13):
    # flat trough; sampling noise at 2e4 per phase can move the argmin one step
    lowest = _assert_minimum_matches_oracle(squeezed_axis, squeezed, profile13, max_radius=1.05)
    assert lowest.value < 0
    sigma, argmin = significance(squeezed_axis)
    # 2e4 samples per phase; the full-size run targets sigma <= -30 at 1e5
    assert sigma <= -10
    assert 0.7 <= abs(argmin) <= 1.1


def test_squeezed_estimates_agree_with_discrete_phase_oracle(squeezed_data, squeezed, dense13, profile13):
    grid = estimate_grid(squeezed_data, dense13, RE_AXIS, 0)
    within = 0
    for p in grid.points:
        reference = oracle_discrete_phase(squeezed, p.alpha, 1.3, 21, profile=profile13)
        within += abs(p.value - reference) <= 3 * p.std_err
    assert within / len(grid.points) >= 0.95


def test_missing_phase_rejected(squeezed_data, dense13):
    keep = squeezed_data.phase_index != 0
    partial = QuadratureDataset(
        phase_grid=squeezed_data.phase_grid,
        phase_index=squeezed_data.phase_index[keep],
        x=squeezed_data.x[keep],
    )
    with pytest.raises(EstimationError, match="phase indices without samples: 0"):
        estimate_point(partial, dense13, 0.9, 0)
    with pytest.raises(EstimationError):
        estimate_grid(partial, dense13, RE_AXIS, 0)


def test_vacuum_shows_no_significant_negativity(vacuum_data, vacuum, dense13, profile13):
    grid = estimate_grid(vacuum_data, dense13, GridSpec.parse("im:-3,3,0.15"), 0)
    assert all(p.value >= -3 * p.std_err for p in grid.points)
    sigma, _ = significance(grid)
    assert sigma > -3


def test_thermal_shows_no_significant_negativity(dense13, grid21):
    thermal = simulate_quadratures(GaussianStateSpec.thermal(2.0), grid21, 20000, seed=14)
    grid = estimate_grid(thermal, dense13, GridSpec.parse("re:-3,3,0.15"), 0)
    assert all(p.value >= -3 * p.std_err for p in grid.points)
    result = scan_width(thermal, [1.0, 1.6], GridSpec.parse("re:-3,3,0.3"), 0, fast_kernel=True)
    assert all(e.sigma > -3 for e in result.entries if e.ok)


def test_stderr_scales_with_sample_count(squeezed_data, dense13):
    full = estimate_point(squeezed_data, dense13, 0.9, 0)
    half = estimate_point(squeezed_data.truncate(10000), dense13, 0.9, 0)
    assert half.std_err / full.std_err == pytest.approx(math.sqrt(2), rel=0.1)


def test_significance_picks_first_minimum():
    spec = GridSpec.parse("re:0,0.2,0.1")
    points = [
        PointEstimate(re=0.0, im=0.0, value=-1.0, std_err=0.5, n=10),
        PointEstimate(re=0.1, im=0.0, value=-2.0, std_err=1.0, n=10),
        PointEstimate(re=0.2, im=0.0, value=1.0, std_err=1.0, n=10),
    ]
    grid = QuasiprobGrid(spec=spec, points=points, width=1.3, dither_seed=0)
    assert significance(grid) == (-2.0, 0j)


def test_significance_positive_grid():
    spec = GridSpec.parse("re:0,0.1,0.1")
    points = [PointEstimate(re=0.0, im=0.0, value=0.2, std_err=0.1, n=5), PointEstimate(re=0.1, im=0.0, value=0.1, std_err=0.1, n=5)]
    sigma, _ = significance(QuasiprobGrid(spec=spec, points=points, width=1.0, dither_seed=0))
    assert sigma > 0


def test_significance_needs_nonzero_stderr(vacuum, table13):
    single = simulate_quadratures(vacuum, PhaseGrid.uniform(1), 1, seed=0)
    grid = estimate_grid(single, table13, GridSpec.parse("re:0,0,0.1"), 0)
    with pytest.raises(DegenerateEstimateError):
        significance(grid)


def test_scan_optimum_tie_breaks_on_smaller_width():
    entries = [
        WidthScanEntry(width=1.4, sigma=-5.0, argmin_re=0.9, argmin_im=0.0),
        WidthScanEntry(width=1.2, sigma=-5.0, argmin_re=0.9, argmin_im=0.0),
        WidthScanEntry(width=1.0, note="failed"),
    ]
    assert WidthScanResult.from_entries(entries).optimum.width == 1.2


def test_scan_single_width(squeezed_data):
    result = scan_width(squeezed_data, [1.3], RE_AXIS, 0, fast_kernel=True)
    assert len(result.entries) == 1
    assert result.optimum.width == 1.3
    assert result.optimum.sigma < 0


def test_scan_records_failed_widths(squeezed_data):
    result = scan_width(squeezed_data, [-0.5, 1.3], RE_AXIS, 0, fast_kernel=True)
    failed, ok = result.entries
    assert math.isnan(failed.sigma) and failed.note
    assert ok.ok
    assert result.optimum.width == 1.3


def test_scan_finds_interior_optimum(squeezed_data):
    widths = [round(0.7 + 0.1 * i, 10) for i in range(14)]
    result = scan_width(squeezed_data, widths, RE_AXIS, 0, fast_kernel=True)
    assert 1.0 <= result.optimum.width <= 1.6
    assert result.optimum.width not in (widths[0], widths[-1])


def test_scan_on_vacuum_stays_classical(vacuum_data):
    result = scan_width(vacuum_data, [0.9, 1.3, 1.6], GridSpec.parse("im:-3,3,0.3"), 0, fast_kernel=True)
    assert all(e.sigma > -3 for e in result.entries if e.ok)


@pytest.mark.slow
def test_full_size_acceptance(squeezed, dense13, profile13):
    data = simulate_quadratures(squeezed, PhaseGrid.uniform(21), 100000, seed=7)
    grid = estimate_grid(data, dense13, GridSpec.parse("re:-3,3,0.05"), 0)
    lowest = _assert_minimum_matches_oracle(grid, squeezed, profile13)
    assert lowest.std_err <= 1.5e-3
    sigma, _ = significance(grid)
    assert sigma <= -30


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_significance_over_seeds(squeezed, dense13, seed):
    data = simulate_quadratures(squeezed, PhaseGrid.uniform(21), 100000, seed=seed)
    sigma, _ = significance(estimate_grid(data, dense13, GridSpec.parse("re:0,2,0.05"), 0))
    assert sigma <= -30


@pytest.mark.slow
def test_significance_grows_with_sample_count(squeezed, dense13):
    data = simulate_quadratures(squeezed, PhaseGrid.uniform(21), 200000, seed=8)
    spec = GridSpec.parse("re:0,2,0.05")
    big, _ = significance(estimate_grid(data, dense13, spec, 0))
    small, _ = significance(estimate_grid(data.truncate(100000), dense13, spec, 0))
    assert big / small == pytest.approx(math.sqrt(2), rel=0.25)


@pytest.mark.slow
def test_full_size_width_scan(squeezed):
    data = simulate_quadratures(squeezed, PhaseGrid.uniform(21), 100000, seed=7)
    widths = [round(0.7 + 0.1 * i, 10) for i in range(14)]
    result = scan_width(data, widths, GridSpec.parse("re:-3,3,0.05"), 0, fast_kernel=True)
    assert 1.0 <= result.optimum.width <= 1.6


@pytest.mark.slow
def test_full_size_vacuum_agrees_with_oracle(vacuum, dense13, profile13):
    data = simulate_quadratures(vacuum, PhaseGrid.uniform(21), 100000, seed=13)
    grid = estimate_grid(data, dense13, GridSpec.parse("im:-3,3,0.15"), 0)
    within = 0
    for p in grid.points:
        assert p.value >= -3 * p.std_err
        within += abs(p.value - oracle_discrete_phase(vacuum, p.alpha, 1.3, 21, profile=profile13)) <= 3 * p.std_err
    assert within / len(grid.points) >= 0.95
