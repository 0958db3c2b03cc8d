"""Composite Gauss-Legendre rules shared by the filter, kernel and oracle integrals."""

import math
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

GAUSS_ORDER = 16


@lru_cache(maxsize=16)
def _reference_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre_panels(a: float, b: float, n_panels: int, order: int = GAUSS_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of `n_panels` equal Gauss-Legendre panels on [a, b]."""
    if n_panels < 1:
        raise ValueError("n_panels must be >= 1")
    ref_x, ref_w = _reference_rule(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
    weights = (half[:, None] * ref_w[None, :]).ravel()
    return nodes, weights


def symmetric_panels(half_width: float, n_panels: int, order: int = GAUSS_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Rule on [-h, h] whose nodes are exact mirror images of the rule on [0, h]."""
    nodes, weights = gauss_legendre_panels(0.0, half_width, n_panels, order)
    return np.concatenate([-nodes[::-1], nodes]), np.concatenate([weights[::-1], weights])


def panels_for_oscillation(
    span: float,
    max_frequency: float,
    nodes_per_period: int = 8,
    order: int = GAUSS_ORDER,
    min_panels: int = 1,
) -> int:
    """Panel count giving at least `nodes_per_period` nodes per period of cos(max_frequency * t)."""
    periods = span * max_frequency / (2.0 * math.pi)
    nodes = math.ceil(periods * nodes_per_period)
    return max(min_panels, math.ceil(nodes / order))


__all__ = [
    "GAUSS_ORDER",
    "gauss_legendre_panels",
    "symmetric_panels",
    "panels_for_oscillation",
]
