"""Autocorrelation filter Omega_w(b) and its tabulation.

The unit-width profile Omega_1 is the normalized autocorrelation of exp(-|beta|^4),
computed once per node count on r in [0, 4]; every width reuses it through
Omega_w(b) = Omega_1(b / w).
"""

import logging
import math
from functools import lru_cache
from typing import Any, Tuple

import numpy as np

from .errors import FilterConvergenceError
from .models import FilterProfile
from .quadrature import gauss_legendre_panels

log = logging.getLogger(__name__)

SUPPORT_RADII = 4.0
RHO_MAX = 3.0
RHO_PANELS = 20
THETA_PANELS = 24
CONVERGENCE_TOLERANCE = 1e-12
MONOTONE_SLACK = 1e-15
DEFAULT_NODES = 2048
_CHUNK = 16

EXACT_NORMALIZATION = 0.5 * math.pi * math.sqrt(0.5 * math.pi)


def omega_base(beta_abs: Any) -> Any:
    """exp(-|beta|^4)."""
    b2 = np.square(beta_abs)
    return np.exp(-b2 * b2)


@lru_cache(maxsize=4)
def _polar_rule(refinement: int = 1) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rho, w_rho = gauss_legendre_panels(0.0, RHO_MAX, RHO_PANELS * refinement)
    # the integrand is symmetric under theta -> -theta, so [0, pi] is doubled
    theta, w_theta = gauss_legendre_panels(0.0, math.pi, THETA_PANELS * refinement)
    weights = 2.0 * np.outer(rho * w_rho, w_theta)
    return rho, np.cos(theta), weights


def autocorrelation(r: Any, refinement: int = 1) -> np.ndarray:
    """Unnormalized integral of exp(-|beta|^4 - |beta + r|^4) over the plane."""
    r = np.atleast_1d(np.asarray(r, dtype=np.float64))
    rho, cos_theta, weights = _polar_rule(refinement)
    rho2 = rho * rho
    rho4 = (rho2 * rho2)[:, None]
    cross = 2.0 * np.outer(rho, cos_theta)
    out = np.empty(r.size)
    for start in range(0, r.size, _CHUNK):
        rr = r[start : start + _CHUNK, None, None]
        shifted = rho2[None, :, None] + rr * rr + rr * cross[None]
        out[start : start + _CHUNK] = np.einsum("kij,ij->k", np.exp(-rho4[None] - shifted * shifted), weights)
    return out


@lru_cache(maxsize=4)
def _unit_profile(n_nodes: int) -> Tuple[np.ndarray, np.ndarray, float, float]:
    r = np.linspace(0.0, SUPPORT_RADII, n_nodes)
    raw = autocorrelation(r)
    normalization = float(raw[0])
    error = abs(normalization / EXACT_NORMALIZATION - 1.0)
    values = raw / normalization
    values[0] = 1.0
    r.setflags(write=False)
    values.setflags(write=False)
    log.debug("unit filter: %d nodes, normalization error %.3e, edge value %.3e", n_nodes, error, values[-1])
    return r, values, normalization, error


def build_filter_profile(w: float, n_nodes: int = DEFAULT_NODES) -> FilterProfile:
    if not (w > 0 and math.isfinite(w)):
        raise ValueError(f"filter width must be positive, got {w!r}")
    if n_nodes < 64:
        raise ValueError("n_nodes must be >= 64")
    r, values, normalization, error = _unit_profile(n_nodes)
    if error > CONVERGENCE_TOLERANCE:
        raise FilterConvergenceError(f"filter normalization quadrature error {error:.3e} exceeds {CONVERGENCE_TOLERANCE:g}")
    if np.any(values <= 0.0):
        raise FilterConvergenceError("filter profile is not strictly positive")
    if np.any(np.diff(values) > MONOTONE_SLACK):
        raise FilterConvergenceError("filter profile is not non-increasing in |b|")
    return FilterProfile(
        width=float(w),
        b_cut=SUPPORT_RADII * w,
        nodes=r * w,
        values=values,
        normalization=normalization,
        quadrature_error=error,
    )


def filter_value(profile: FilterProfile, b: Any) -> Any:
    """Omega_w(b); exactly zero for |b| > b_cut."""
    b_abs = np.abs(np.asarray(b, dtype=np.float64))
    out = np.zeros_like(b_abs)
    inside = b_abs <= profile.b_cut
    out[inside] = profile.spline(b_abs[inside])
    if out.ndim == 0:
        return float(out)
    return out


__all__ = [
    "SUPPORT_RADII",
    "EXACT_NORMALIZATION",
    "omega_base",
    "autocorrelation",
    "build_filter_profile",
    "filter_value",
]
