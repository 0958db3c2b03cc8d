"""Deterministic references for zero-mean Gaussian states.

All integrals use the quadrature-phase form

    P(alpha) = 1/pi^2 int db int_0^pi dphi |b| exp(-2i|alpha| b cos(theta - phi))
               exp(b^2 (1 - V(phi)) / 2) Omega_w(b),      theta = arg(alpha),

which is the polar Fourier integral of Phi(beta) Omega_w(beta) after rotating the
angle by pi/2.
"""

import logging
import math
from typing import Any, Optional, Tuple

import numpy as np
from scipy.special import i0e, j1

from .config import OracleConfig
from .errors import NumericGateError, OracleResolutionError
from .filter import DEFAULT_NODES, build_filter_profile, filter_value
from .gaussian_sim import quadrature_variance
from .models import FilterProfile, GaussianStateSpec
from .quadrature import GAUSS_ORDER, gauss_legendre_panels, panels_for_oscillation, symmetric_panels

log = logging.getLogger(__name__)

RADIAL_NODES_PER_PERIOD = 8
DEFAULT_RADIAL_NODES = 256
ANGULAR_NODES_PER_UNIT = 64
CELL_NODES = 16
DEFAULT_DISC_RADIUS = 6.0
_PHI_CHUNK = 256


def gaussian_characteristic(state: GaussianStateSpec, b: Any, phi: Any) -> Any:
    """Phi(b e^{i phi}) = exp(b^2 (1 - V(phi - pi/2)) / 2)."""
    b = np.asarray(b, dtype=np.float64)
    out = np.exp(0.5 * b * b * (1.0 - quadrature_variance(state, np.asarray(phi) - 0.5 * math.pi)))
    return float(out) if np.ndim(out) == 0 else out


def _profile_for(w: float, profile: Optional[FilterProfile]) -> FilterProfile:
    if profile is not None:
        if not math.isclose(profile.width, w, rel_tol=1e-12):
            raise ValueError(f"profile width {profile.width:g} does not match w={w:g}")
        return profile
    return build_filter_profile(w, DEFAULT_NODES)


def _b_max(cfg: OracleConfig, profile: FilterProfile) -> float:
    return cfg.b_max if cfg.b_max is not None else profile.b_cut


def _radial_rule(cfg: OracleConfig, b_max: float, alpha_abs: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on [0, b_max] resolving cos(2|alpha| b)."""
    required_panels = panels_for_oscillation(b_max, 2.0 * alpha_abs, RADIAL_NODES_PER_PERIOD, GAUSS_ORDER, 1)
    required = required_panels * GAUSS_ORDER
    if cfg.radial_nodes is None:
        n_nodes = max(DEFAULT_RADIAL_NODES, required)
    elif cfg.radial_nodes < required:
        raise OracleResolutionError(f"radial grid too coarse for |alpha|={alpha_abs:g}, b_max={b_max:g}", required)
    else:
        n_nodes = cfg.radial_nodes
    return gauss_legendre_panels(0.0, b_max, math.ceil(n_nodes / GAUSS_ORDER))


def _angular_count(cfg: OracleConfig, b_max: float, alpha_abs: float) -> int:
    required = math.ceil(ANGULAR_NODES_PER_UNIT * (1.0 + alpha_abs * b_max))
    if cfg.angular_nodes is None:
        return required
    if cfg.angular_nodes < required:
        raise OracleResolutionError(f"angular grid too coarse for |alpha|={alpha_abs:g}, b_max={b_max:g}", required)
    return cfg.angular_nodes


def _polar_integral(
    profile: FilterProfile,
    alpha: complex,
    cfg: OracleConfig,
    b_max: float,
    phi: np.ndarray,
    phi_weights: np.ndarray,
    variances: np.ndarray,
) -> float:
    """1/pi^2 sum over (phi, b) of the integrand, with V(phi) supplied per angular node."""
    alpha_abs = abs(alpha)
    theta = math.atan2(alpha.imag, alpha.real)
    half_b, _ = _radial_rule(cfg, b_max, alpha_abs)
    b, wb = symmetric_panels(b_max, math.ceil(half_b.size / GAUSS_ORDER))
    radial = wb * np.abs(b) * filter_value(profile, b)
    b2 = b * b

    real = 0.0
    imag = 0.0
    scale = 0.0
    for start in range(0, phi.size, _PHI_CHUNK):
        sl = slice(start, start + _PHI_CHUNK)
        growth = np.exp(0.5 * np.outer(1.0 - variances[sl], b2))
        terms = phi_weights[sl, None] * growth * radial[None, :]
        arg = -2.0 * alpha_abs * np.outer(np.cos(theta - phi[sl]), b)
        real += float(np.sum(terms * np.cos(arg)))
        imag += float(np.sum(terms * np.sin(arg)))
        scale += float(np.sum(np.abs(terms)))
    norm = 1.0 / (math.pi * math.pi)
    residue = abs(imag) * norm
    if residue > max(cfg.tolerance, 1e-12 * scale * norm):
        raise NumericGateError(f"oracle imaginary residue {residue:.3e} exceeds tolerance {cfg.tolerance:g}")
    return real * norm


def oracle_quasiprob(
    state: GaussianStateSpec,
    alpha: complex,
    w: float,
    cfg: Optional[OracleConfig] = None,
    *,
    profile: Optional[FilterProfile] = None,
) -> float:
    """P_Omega(alpha) by 2D quadrature over the continuum of phases."""
    cfg = cfg or OracleConfig()
    profile = _profile_for(w, profile)
    alpha = complex(alpha)
    b_max = _b_max(cfg, profile)
    n_phi = _angular_count(cfg, b_max, abs(alpha))
    phi = math.pi * np.arange(n_phi) / n_phi
    weights = np.full(n_phi, math.pi / n_phi)
    return _polar_integral(profile, alpha, cfg, b_max, phi, weights, quadrature_variance(state, phi))


def _phase_cells(n_phases: int, cfg: OracleConfig, b_max: float, alpha_abs: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if n_phases < 1:
        raise ValueError("n_phases must be >= 1")
    per_cell = max(CELL_NODES, math.ceil(_angular_count(cfg, b_max, alpha_abs) / n_phases))
    half = math.pi / (2 * n_phases)
    psi, w_psi = gauss_legendre_panels(-half, half, math.ceil(per_cell / GAUSS_ORDER))
    centers = math.pi * np.arange(n_phases) / n_phases
    phi = (centers[:, None] + psi[None, :]).ravel()
    weights = np.tile(w_psi, n_phases)
    owner = np.repeat(centers, psi.size)
    return phi, weights, owner


def oracle_discrete_phase(
    state: GaussianStateSpec,
    alpha: complex,
    w: float,
    n_phases: int,
    cfg: Optional[OracleConfig] = None,
    *,
    profile: Optional[FilterProfile] = None,
) -> float:
    """Expected value of the dithered estimator: quadrature at the measured phases phi_k,
    pattern function averaged over each phase cell."""
    cfg = cfg or OracleConfig()
    profile = _profile_for(w, profile)
    alpha = complex(alpha)
    b_max = _b_max(cfg, profile)
    phi, weights, owner = _phase_cells(n_phases, cfg, b_max, abs(alpha))
    return _polar_integral(profile, alpha, cfg, b_max, phi, weights, quadrature_variance(state, owner))


def systematic_error(
    state: GaussianStateSpec,
    alpha: complex,
    w: float,
    n_phases: int,
    cfg: Optional[OracleConfig] = None,
    *,
    profile: Optional[FilterProfile] = None,
) -> float:
    profile = _profile_for(w, profile)
    continuous = oracle_quasiprob(state, alpha, w, cfg, profile=profile)
    discrete = oracle_discrete_phase(state, alpha, w, n_phases, cfg, profile=profile)
    return abs(continuous - discrete)


def riemann_sum_quasiprob(
    state: GaussianStateSpec,
    alpha: complex,
    w: float,
    n_phases: int,
    cfg: Optional[OracleConfig] = None,
    *,
    profile: Optional[FilterProfile] = None,
) -> float:
    """Phase integral replaced by a plain average over the measured phases.

    Kept as a negative control: along a measured direction the result does not decay in |alpha|.
    """
    if n_phases < 1:
        raise ValueError("n_phases must be >= 1")
    cfg = cfg or OracleConfig()
    profile = _profile_for(w, profile)
    alpha = complex(alpha)
    alpha_abs = abs(alpha)
    theta = math.atan2(alpha.imag, alpha.real)
    b_max = _b_max(cfg, profile)
    b, wb = _radial_rule(cfg, b_max, alpha_abs)
    radial = (2.0 / math.pi) * wb * b * filter_value(profile, b)

    phases = math.pi * np.arange(n_phases) / n_phases
    growth = np.exp(0.5 * np.outer(1.0 - quadrature_variance(state, phases), b * b))
    oscillation = np.cos(2.0 * alpha_abs * np.outer(np.cos(theta - phases), b))
    return float(np.sum((growth * oscillation) @ radial) / n_phases)


def wigner_squeezed(state: GaussianStateSpec, x: Any, p: Any) -> Any:
    norm = 1.0 / (2.0 * math.pi * math.sqrt(state.v_x * state.v_p))
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    out = norm * np.exp(-0.5 * x * x / state.v_x - 0.5 * p * p / state.v_p)
    return float(out) if np.ndim(out) == 0 else out


def normalization_check(
    state: GaussianStateSpec,
    w: float,
    cfg: Optional[OracleConfig] = None,
    radius: float = DEFAULT_DISC_RADIUS,
    *,
    profile: Optional[FilterProfile] = None,
) -> float:
    """Integral of P_Omega over the disc |alpha| <= radius.

    Integrating the Fourier representation over the disc first leaves a radial integral
    2R int J1(2Rb) Omega_w(b) <Phi(b e^{i phi})>_phi db, where the phase average of the
    Gaussian characteristic function is exp(b^2 (2 - v_x - v_p) / 4) I0(b^2 (v_p - v_x) / 4).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    cfg = cfg or OracleConfig()
    profile = _profile_for(w, profile)
    b_max = _b_max(cfg, profile)
    panels = panels_for_oscillation(b_max, 2.0 * radius, 2 * RADIAL_NODES_PER_PERIOD, GAUSS_ORDER, DEFAULT_RADIAL_NODES // GAUSS_ORDER)
    b, wb = gauss_legendre_panels(0.0, b_max, panels)
    b2 = b * b
    z = 0.25 * b2 * abs(state.v_p - state.v_x)
    phase_average = np.exp(0.25 * b2 * (2.0 - state.v_x - state.v_p) + z) * i0e(z)
    total = 2.0 * radius * float(np.sum(wb * j1(2.0 * radius * b) * filter_value(profile, b) * phase_average))
    log.debug("normalization over |alpha| <= %g: %.9f", radius, total)
    return total


__all__ = [
    "gaussian_characteristic",
    "oracle_quasiprob",
    "oracle_discrete_phase",
    "systematic_error",
    "riemann_sum_quasiprob",
    "wigner_squeezed",
    "normalization_check",
]
