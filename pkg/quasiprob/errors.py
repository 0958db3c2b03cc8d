from typing import Iterable, List, Optional, Tuple


class QuasiprobError(Exception):
    """Root of all errors raised by the quasiprob package."""


class DatasetFormatError(QuasiprobError):
    def __init__(self, message: str, lineno: Optional[int] = None) -> None:
        self.lineno = lineno
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)


class PhaseGridError(QuasiprobError):
    pass


class GridSpecError(QuasiprobError):
    pass


class EstimationError(QuasiprobError):
    pass


class DegenerateEstimateError(EstimationError):
    pass


class GridMismatchError(QuasiprobError):
    def __init__(self, missing: Iterable[Tuple[float, float]]) -> None:
        self.missing: List[Tuple[float, float]] = list(missing)
        shown = ", ".join(f"({re:g},{im:g})" for re, im in self.missing[:20])
        more = "" if len(self.missing) <= 20 else f" ... (+{len(self.missing) - 20} more)"
        super().__init__(f"grids do not match; points missing from one side: {shown}{more}")


class NumericGateError(QuasiprobError):
    """A numerical accuracy or resolution requirement was not met."""


class FilterConvergenceError(NumericGateError):
    pass


class KernelAccuracyError(NumericGateError):
    pass


class OracleResolutionError(NumericGateError):
    def __init__(self, message: str, required_nodes: int) -> None:
        self.required_nodes = required_nodes
        super().__init__(f"{message} (need at least {required_nodes} nodes)")


class UnphysicalStateWarning(UserWarning):
    """Quadrature variances violate the uncertainty relation v_x * v_p >= 1."""


__all__ = [
    "QuasiprobError",
    "DatasetFormatError",
    "PhaseGridError",
    "GridSpecError",
    "EstimationError",
    "DegenerateEstimateError",
    "GridMismatchError",
    "NumericGateError",
    "FilterConvergenceError",
    "KernelAccuracyError",
    "OracleResolutionError",
    "UnphysicalStateWarning",
]
