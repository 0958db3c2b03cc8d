import math
import re
import warnings
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator
from scipy.interpolate import CubicSpline

from .errors import GridSpecError, UnphysicalStateWarning

EQUISPACED_TOLERANCE = 1e-12
GRID_DECIMALS = 12

DatasetSource = Literal["simulated", "external"]


def _readonly(values: Any, dtype: Any) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _even_spline(nodes: np.ndarray, values: np.ndarray) -> CubicSpline:
    # clamped slope 0 at the origin: every tabulated function here is even
    return CubicSpline(nodes, values, bc_type=((1, 0.0), "not-a-knot"))


class GaussianStateSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    v_x: float = Field(gt=0, allow_inf_nan=False)
    v_p: float = Field(gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def warn_unphysical(self) -> "GaussianStateSpec":
        if self.v_x * self.v_p < 1.0 - 1e-12:
            warnings.warn(
                f"v_x * v_p = {self.v_x * self.v_p:.6g} < 1 violates the uncertainty relation",
                UnphysicalStateWarning,
                stacklevel=2,
            )
        return self

    @classmethod
    def vacuum(cls) -> "GaussianStateSpec":
        return cls(v_x=1.0, v_p=1.0)

    @classmethod
    def thermal(cls, variance: float) -> "GaussianStateSpec":
        return cls(v_x=variance, v_p=variance)


class PhaseGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    phases: Tuple[float, ...]

    @field_validator("phases")
    @classmethod
    def check_phases(cls, phases: Tuple[float, ...]) -> Tuple[float, ...]:
        if not phases:
            raise ValueError("phase grid needs at least one phase")
        for phi in phases:
            if not (0.0 <= phi < math.pi):
                raise ValueError(f"phase {phi!r} outside [0, pi)")
        if any(b <= a for a, b in zip(phases, phases[1:])):
            raise ValueError("phases must be strictly increasing")
        return phases

    @property
    def n_phases(self) -> int:
        return len(self.phases)

    @property
    def equispaced(self) -> bool:
        n = self.n_phases
        return all(abs(phi - k * math.pi / n) <= EQUISPACED_TOLERANCE for k, phi in enumerate(self.phases))

    @classmethod
    def uniform(cls, n_phases: int) -> "PhaseGrid":
        if n_phases < 1:
            raise ValueError("n_phases must be >= 1")
        return cls(phases=tuple(k * math.pi / n_phases for k in range(n_phases)))


class QuadratureDataset(BaseModel):
    """Homodyne samples stored phase-major: `phase_index[i]` selects the phase of `x[i]`."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    phase_grid: PhaseGrid
    phase_index: np.ndarray
    x: np.ndarray
    seed: Optional[int] = None
    source: DatasetSource = "external"
    state: Optional[GaussianStateSpec] = None

    @field_validator("phase_index", mode="before")
    @classmethod
    def as_index_array(cls, value: Any) -> np.ndarray:
        return _readonly(value, np.int64).ravel()

    @field_validator("x", mode="before")
    @classmethod
    def as_sample_array(cls, value: Any) -> np.ndarray:
        return _readonly(value, np.float64).ravel()

    @model_validator(mode="after")
    def check_layout(self) -> "QuadratureDataset":
        if self.phase_index.shape != self.x.shape:
            raise ValueError("phase_index and x must have the same length")
        if self.x.size:
            if self.phase_index.min() < 0 or self.phase_index.max() >= self.phase_grid.n_phases:
                raise ValueError("phase index out of range for the phase grid")
            if not np.all(np.isfinite(self.x)):
                raise ValueError("quadrature samples must be finite")
        return self

    @property
    def n_samples(self) -> int:
        return int(self.x.size)

    def counts(self) -> np.ndarray:
        return np.bincount(self.phase_index, minlength=self.phase_grid.n_phases)

    def sample_phases(self) -> np.ndarray:
        return np.asarray(self.phase_grid.phases, dtype=np.float64)[self.phase_index]

    def samples_at(self, k: int) -> np.ndarray:
        return self.x[self.phase_index == k]

    def truncate(self, n_per_phase: int) -> "QuadratureDataset":
        """Keep the first `n_per_phase` samples of every phase, preserving order."""
        if n_per_phase < 0:
            raise ValueError("n_per_phase must be >= 0")
        keep = np.zeros(self.n_samples, dtype=bool)
        for k in range(self.phase_grid.n_phases):
            keep[np.flatnonzero(self.phase_index == k)[:n_per_phase]] = True
        return self.model_copy(update={"phase_index": self.phase_index[keep], "x": self.x[keep]})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuadratureDataset):
            return NotImplemented
        return (
            self.phase_grid == other.phase_grid
            and self.seed == other.seed
            and self.source == other.source
            and self.state == other.state
            and np.array_equal(self.phase_index, other.phase_index)
            and np.array_equal(self.x, other.x)
        )

    __hash__ = None  # type: ignore[assignment]


class FilterProfile(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    width: float
    b_cut: float
    nodes: np.ndarray
    values: np.ndarray
    normalization: float
    quadrature_error: float
    _spline: CubicSpline = PrivateAttr()

    def model_post_init(self, __context: Any) -> None:
        self._spline = _even_spline(self.nodes, self.values)

    @property
    def spline(self) -> CubicSpline:
        return self._spline


class ChiTable(BaseModel):
    """Kernel samples chi(j * pi / b_cut); chi is band-limited to |b| <= b_cut."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    width: float
    b_cut: float
    coeffs: np.ndarray
    accuracy: float
    tail: float

    @property
    def n_coeff(self) -> int:
        return int(self.coeffs.size)

    @property
    def spacing(self) -> float:
        return math.pi / self.b_cut

    @property
    def xi_max(self) -> float:
        return self.spacing * (self.n_coeff - 1)


class DenseChi(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    table: ChiTable
    step: float
    knots: np.ndarray
    values: np.ndarray
    max_error: float
    _spline: CubicSpline = PrivateAttr()

    def model_post_init(self, __context: Any) -> None:
        self._spline = _even_spline(self.knots, self.values)

    @property
    def spline(self) -> CubicSpline:
        return self._spline

    @property
    def width(self) -> float:
        return self.table.width

    @property
    def b_cut(self) -> float:
        return self.table.b_cut


_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_AXIS_RE = re.compile(rf"^(re|im):({_NUMBER}),({_NUMBER}),({_NUMBER})$")


def _clean(value: float) -> float:
    return round(float(value), GRID_DECIMALS) + 0.0


class AxisRange(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: float
    stop: float
    step: float = Field(gt=0)

    @model_validator(mode="after")
    def check_order(self) -> "AxisRange":
        if self.stop < self.start:
            raise ValueError("axis stop must be >= start")
        return self

    def values(self) -> List[float]:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [_clean(self.start + i * self.step) for i in range(n)]

    @classmethod
    def single(cls, value: float = 0.0) -> "AxisRange":
        return cls(start=value, stop=value, step=1.0)


class GridSpec(BaseModel):
    """Rectangular alpha grid; points run row-major with Re(alpha) outer and Im(alpha) inner."""

    model_config = ConfigDict(frozen=True)

    re: AxisRange
    im: AxisRange
    text: str = ""

    @property
    def is_axis(self) -> bool:
        return len(self.re.values()) == 1 or len(self.im.values()) == 1

    def points(self) -> List[complex]:
        ims = self.im.values()
        return [complex(r, i) for r in self.re.values() for i in ims]

    def __len__(self) -> int:
        return len(self.re.values()) * len(self.im.values())

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse `re:a,b,s,im:a,b,s` (either order) or a single-axis `re:a,b,s` / `im:a,b,s`."""
        cleaned = text.replace(" ", "")
        parts = cleaned.split(",")
        if len(parts) not in (3, 6):
            raise GridSpecError(f"cannot parse grid spec {text!r}")
        axes: Dict[str, AxisRange] = {}
        for chunk in (parts[i : i + 3] for i in range(0, len(parts), 3)):
            match = _AXIS_RE.match(",".join(chunk))
            if not match:
                raise GridSpecError(f"cannot parse grid spec {text!r}")
            name, start, stop, step = match.groups()
            if name in axes:
                raise GridSpecError(f"axis {name!r} given twice in {text!r}")
            try:
                axes[name] = AxisRange(start=float(start), stop=float(stop), step=float(step))
            except ValueError as exc:
                raise GridSpecError(f"invalid range for {name!r} in {text!r}: {exc}") from exc
        return cls(
            re=axes.get("re", AxisRange.single()),
            im=axes.get("im", AxisRange.single()),
            text=cleaned,
        )


def parse_widths(text: str) -> List[float]:
    """`start:stop:step` inclusive range, or a comma list of widths."""
    cleaned = text.replace(" ", "")
    try:
        if ":" in cleaned:
            start, stop, step = (float(v) for v in cleaned.split(":"))
            return AxisRange(start=start, stop=stop, step=step).values()
        widths = [float(v) for v in cleaned.split(",") if v]
    except ValueError as exc:
        raise GridSpecError(f"cannot parse widths {text!r}") from exc
    if not widths:
        raise GridSpecError(f"no widths in {text!r}")
    return widths


class PointEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    re: float
    im: float
    value: float
    std_err: float = Field(ge=0)
    n: int = Field(ge=0)

    @property
    def alpha(self) -> complex:
        return complex(self.re, self.im)


class QuasiprobGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: GridSpec
    points: List[PointEstimate]
    width: float
    dither_seed: int

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def std_errs(self) -> np.ndarray:
        return np.array([p.std_err for p in self.points])

    def alphas(self) -> List[complex]:
        return [p.alpha for p in self.points]


class WidthScanEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    width: float
    sigma: float = math.nan
    argmin_re: Optional[float] = None
    argmin_im: Optional[float] = None
    note: str = ""

    @property
    def ok(self) -> bool:
        return not math.isnan(self.sigma)


class WidthScanResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: List[WidthScanEntry]
    optimum: Optional[WidthScanEntry] = None

    @classmethod
    def from_entries(cls, entries: List[WidthScanEntry]) -> "WidthScanResult":
        best: Optional[WidthScanEntry] = None
        for entry in entries:
            if not entry.ok:
                continue
            if best is None or entry.sigma < best.sigma or (entry.sigma == best.sigma and entry.width < best.width):
                best = entry
        return cls(entries=list(entries), optimum=best)


class ComparePoint(BaseModel):
    re: float
    im: float
    sampled: float
    oracle: float
    std_err: float
    z: Optional[float] = None


class CompareReport(BaseModel):
    threshold: float
    points: List[ComparePoint]
    fraction_within: float
    max_abs_z: Optional[float] = None
    pass_fraction: float = 0.95

    @property
    def passed(self) -> bool:
        return self.fraction_within >= self.pass_fraction


class RunManifest(BaseModel):
    command: str
    flags: Dict[str, Any] = Field(default_factory=dict)
    seeds: Dict[str, Optional[int]] = Field(default_factory=dict)
    dataset_sha256: Optional[str] = None
    versions: Dict[str, str] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    created_at: str


__all__ = [
    "GaussianStateSpec",
    "PhaseGrid",
    "QuadratureDataset",
    "FilterProfile",
    "ChiTable",
    "DenseChi",
    "AxisRange",
    "GridSpec",
    "parse_widths",
    "PointEstimate",
    "QuasiprobGrid",
    "WidthScanEntry",
    "WidthScanResult",
    "ComparePoint",
    "CompareReport",
    "RunManifest",
]
