"""Pattern kernel chi(xi; w) and the pattern functions built from it.

chi(xi) = 2 * int_0^{b_c} (b / pi) cos(b xi) exp(b^2 / 2) Omega_w(b) db is band-limited to
|b| <= b_c, so it is stored as samples at xi_j = pi j / b_c and reconstructed anywhere with
a sinc series.
"""

import logging
import math
from typing import Any, Tuple, Union

import numpy as np

from .errors import KernelAccuracyError, PhaseGridError
from .filter import filter_value
from .gaussian_sim import DITHER_STREAM, phase_stream
from .models import ChiTable, DenseChi, FilterProfile, PhaseGrid, QuadratureDataset
from .quadrature import GAUSS_ORDER, gauss_legendre_panels, panels_for_oscillation

log = logging.getLogger(__name__)

DEFAULT_COEFFICIENTS = 256
RETRY_COEFFICIENTS = 512
ACCURACY_LIMIT = 3.5e-5
IMAGINARY_TOLERANCE = 1e-12
VERIFY_SPAN = 20.0
VERIFY_POINTS = 2001
NODES_PER_PERIOD = 16
MIN_PANELS = 32
DENSE_TOLERANCE = 1e-6
DENSE_START_SUBDIVISIONS = 8
DENSE_MAX_SUBDIVISIONS = 256
_SINC_CHUNK = 2048
_COS_CHUNK = 512

Kernel = Union[ChiTable, DenseChi]


def kernel_weight(profile: FilterProfile, b: Any) -> np.ndarray:
    """|b| / pi * exp(b^2 / 2) * Omega_w(b)."""
    b = np.asarray(b, dtype=np.float64)
    return np.abs(b) / math.pi * np.exp(0.5 * b * b) * filter_value(profile, b)


def _kernel_rule(profile: FilterProfile, max_frequency: float) -> Tuple[np.ndarray, np.ndarray]:
    panels = panels_for_oscillation(profile.b_cut, max_frequency, NODES_PER_PERIOD, GAUSS_ORDER, MIN_PANELS)
    b, w = gauss_legendre_panels(0.0, profile.b_cut, panels)
    return b, w * kernel_weight(profile, b)


def _cosine_transform(b: np.ndarray, weighted: np.ndarray, xi: np.ndarray) -> np.ndarray:
    out = np.empty(xi.size)
    for start in range(0, xi.size, _COS_CHUNK):
        out[start : start + _COS_CHUNK] = 2.0 * (np.cos(np.outer(xi[start : start + _COS_CHUNK], b)) @ weighted)
    return out


def chi_direct(profile: FilterProfile, xi: Any) -> Any:
    """chi by direct quadrature of its defining integral."""
    xi_arr = np.asarray(xi, dtype=np.float64)
    flat = xi_arr.ravel()
    top = float(np.max(np.abs(flat))) if flat.size else 0.0
    b, weighted = _kernel_rule(profile, max(top, 1.0))
    out = _cosine_transform(b, weighted, flat).reshape(xi_arr.shape)
    return float(out) if out.ndim == 0 else out


def _check_imaginary(b: np.ndarray, weighted: np.ndarray, xi: np.ndarray) -> None:
    # full-line integral on mirrored nodes: the sine part must cancel
    b_full = np.concatenate([-b[::-1], b])
    w_full = np.concatenate([weighted[::-1], weighted])
    scale = max(1.0, 2.0 * float(np.sum(np.abs(weighted))))
    for start in range(0, xi.size, _COS_CHUNK):
        imag = np.sin(np.outer(xi[start : start + _COS_CHUNK], b_full)) @ w_full
        worst = float(np.max(np.abs(imag)))
        if worst > IMAGINARY_TOLERANCE * scale:
            raise KernelAccuracyError(f"imaginary residue {worst:.3e} in chi coefficients")


def _build(profile: FilterProfile, n_coeff: int, accuracy_limit: float) -> ChiTable:
    xi_nodes = math.pi * np.arange(n_coeff) / profile.b_cut
    b, weighted = _kernel_rule(profile, float(xi_nodes[-1]))
    _check_imaginary(b, weighted, xi_nodes)
    coeffs = _cosine_transform(b, weighted, xi_nodes)
    coeffs.setflags(write=False)
    provisional = ChiTable(width=profile.width, b_cut=profile.b_cut, coeffs=coeffs, accuracy=math.inf, tail=abs(coeffs[-1]))

    xi_check = np.linspace(-VERIFY_SPAN, VERIFY_SPAN, VERIFY_POINTS)
    accuracy = float(np.max(np.abs(chi(provisional, xi_check) - _cosine_transform(b, weighted, xi_check))))
    tail = float(abs(coeffs[-1]))
    log.debug("chi table w=%g n=%d: accuracy %.3e tail %.3e", profile.width, n_coeff, accuracy, tail)
    if accuracy > accuracy_limit or tail > accuracy_limit:
        raise KernelAccuracyError(
            f"chi table for w={profile.width:g} with {n_coeff} coefficients: "
            f"accuracy {accuracy:.3e}, tail {tail:.3e} (limit {accuracy_limit:g})"
        )
    return provisional.model_copy(update={"accuracy": accuracy, "tail": tail})


def build_chi_table(
    profile: FilterProfile,
    n_coeff: int = DEFAULT_COEFFICIENTS,
    *,
    retry_n_coeff: int = RETRY_COEFFICIENTS,
    accuracy_limit: float = ACCURACY_LIMIT,
) -> ChiTable:
    if n_coeff < 2:
        raise ValueError("n_coeff must be >= 2")
    try:
        return _build(profile, n_coeff, accuracy_limit)
    except KernelAccuracyError as exc:
        if retry_n_coeff <= n_coeff:
            raise
        log.warning("%s; retrying with %d coefficients", exc, retry_n_coeff)
    return _build(profile, retry_n_coeff, accuracy_limit)


def chi(table: ChiTable, xi: Any) -> Any:
    """Sinc reconstruction; evaluated at |xi| so the result is exactly even."""
    xi_abs = np.abs(np.asarray(xi, dtype=np.float64))
    flat = xi_abs.ravel()
    n = table.n_coeff
    j = np.arange(-(n - 1), n, dtype=np.float64)
    c = table.coeffs[np.abs(np.arange(-(n - 1), n))]
    u = flat * (table.b_cut / math.pi)
    out = np.empty(flat.size)
    for start in range(0, flat.size, _SINC_CHUNK):
        out[start : start + _SINC_CHUNK] = np.sinc(u[start : start + _SINC_CHUNK, None] - j[None, :]) @ c
    out = out.reshape(xi_abs.shape)
    return float(out) if out.ndim == 0 else out


def build_dense_chi(
    table: ChiTable,
    tolerance: float = DENSE_TOLERANCE,
    max_subdivisions: int = DENSE_MAX_SUBDIVISIONS,
) -> DenseChi:
    """Cubic-spline lookup of chi on [0, xi_max], refined until it matches the sinc series at midpoints."""
    limit = tolerance * max(1.0, float(np.max(np.abs(table.coeffs))))
    subdivisions = DENSE_START_SUBDIVISIONS
    while subdivisions <= max_subdivisions:
        step = table.spacing / subdivisions
        knots = step * np.arange(subdivisions * (table.n_coeff - 1) + 1)
        values = chi(table, knots)
        knots.setflags(write=False)
        values.setflags(write=False)
        dense = DenseChi(table=table, step=step, knots=knots, values=values, max_error=math.inf)
        mids = knots[:-1] + 0.5 * step
        error = float(np.max(np.abs(dense.spline(mids) - chi(table, mids))))
        if error <= limit:
            log.debug("dense chi w=%g: step pi/(%d b_c), error %.3e", table.width, subdivisions, error)
            return dense.model_copy(update={"max_error": error})
        subdivisions *= 2
    raise KernelAccuracyError(f"dense chi lookup for w={table.width:g} did not reach {limit:.1e}")


def dense_chi(kernel: DenseChi, xi: Any) -> Any:
    xi_abs = np.abs(np.asarray(xi, dtype=np.float64))
    out = np.empty_like(xi_abs)
    inside = xi_abs <= kernel.knots[-1]
    out[inside] = kernel.spline(xi_abs[inside])
    if not np.all(inside):
        out[~inside] = chi(kernel.table, xi_abs[~inside])
    return float(out) if out.ndim == 0 else out


def evaluate_kernel(kernel: Kernel, xi: Any) -> Any:
    if isinstance(kernel, DenseChi):
        return dense_chi(kernel, xi)
    return chi(kernel, xi)


def pattern_argument(x: Any, phi: Any, alpha: complex) -> Any:
    """x + 2|alpha| sin(arg(alpha) - phi - pi/2), written as x - 2 Re(alpha e^{-i phi})."""
    alpha = complex(alpha)
    return np.asarray(x, dtype=np.float64) - 2.0 * (alpha.real * np.cos(phi) + alpha.imag * np.sin(phi))


def pattern_value(table: Kernel, x: Any, phi: Any, alpha: complex) -> Any:
    return evaluate_kernel(table, pattern_argument(x, phi, alpha))


def require_equispaced(grid: PhaseGrid) -> None:
    if not grid.equispaced:
        raise PhaseGridError("phase dithering needs an equispaced grid phi_k = k * pi / N")


def dither_stream(dither_seed: int, phase_index: int) -> np.random.Generator:
    return phase_stream(dither_seed, phase_index, DITHER_STREAM)


def dither_phase(phi_k: float, n_phases: int, rng_stream: np.random.Generator) -> float:
    if n_phases < 1:
        raise ValueError("n_phases must be >= 1")
    half = math.pi / (2 * n_phases)
    return phi_k + rng_stream.uniform(-half, half)


def dither_offsets(dataset: QuadratureDataset, dither_seed: int) -> np.ndarray:
    """Per-sample phase offsets; sample order within each phase selects the draw."""
    grid = dataset.phase_grid
    require_equispaced(grid)
    half = math.pi / (2 * grid.n_phases)
    out = np.zeros(dataset.n_samples)
    for k in range(grid.n_phases):
        idx = np.flatnonzero(dataset.phase_index == k)
        if idx.size:
            out[idx] = dither_stream(dither_seed, k).uniform(-half, half, idx.size)
    return out


def modified_pattern_value(table: Kernel, x: Any, phi_k: float, alpha: complex, n_phases: int) -> Any:
    """Average of the pattern function over the phase cell [phi_k - pi/2N, phi_k + pi/2N]."""
    if n_phases < 1:
        raise ValueError("n_phases must be >= 1")
    half = math.pi / (2 * n_phases)
    max_frequency = 2.0 * abs(complex(alpha)) * table.b_cut
    panels = panels_for_oscillation(2.0 * half, max_frequency, NODES_PER_PERIOD, GAUSS_ORDER, 1)
    psi, w = gauss_legendre_panels(-half, half, panels)
    x_arr = np.asarray(x, dtype=np.float64)
    values = pattern_value(table, x_arr[..., None], phi_k + psi, alpha)
    out = (values @ w) / (2.0 * half)
    return float(out) if np.ndim(out) == 0 else out


__all__ = [
    "DEFAULT_COEFFICIENTS",
    "RETRY_COEFFICIENTS",
    "ACCURACY_LIMIT",
    "Kernel",
    "kernel_weight",
    "chi_direct",
    "build_chi_table",
    "chi",
    "build_dense_chi",
    "dense_chi",
    "evaluate_kernel",
    "pattern_argument",
    "pattern_value",
    "require_equispaced",
    "dither_stream",
    "dither_phase",
    "dither_offsets",
    "modified_pattern_value",
]
