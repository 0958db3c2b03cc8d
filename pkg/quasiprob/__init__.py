"""quasiprob package initialization."""

__all__ = [
    "errors",
    "models",
    "config",
    "quadrature",
    "reduction",
    "gaussian_sim",
    "filter",
    "pattern",
    "estimator",
    "oracle",
    "manifest",
    "reporter",
    "graph",
    "cli",
]
