"""Synthetic homodyne data for Gaussian states, plus the CSV dataset format."""

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import ValidationError

from .errors import DatasetFormatError
from .models import EQUISPACED_TOLERANCE, GaussianStateSpec, PhaseGrid, QuadratureDataset

log = logging.getLogger(__name__)

CSV_HEADER = "phi_rad,x"
SIMULATION_STREAM = 0
DITHER_STREAM = 1

PathLike = Union[str, Path]


def quadrature_variance(state: GaussianStateSpec, phi: Any) -> Any:
    """V(phi) = v_x cos^2(phi) + v_p sin^2(phi)."""
    c = np.cos(phi)
    s = np.sin(phi)
    return state.v_x * c * c + state.v_p * s * s


def phase_stream(seed: int, phase_index: int, stream: int) -> np.random.Generator:
    """Independent counter-based generator for one (purpose, phase) pair."""
    seq = np.random.SeedSequence(seed, spawn_key=(stream, phase_index))
    return np.random.Generator(np.random.Philox(seq))


def _standard_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    u1 = 1.0 - rng.random(n)
    u2 = rng.random(n)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)


def simulate_quadratures(
    state: GaussianStateSpec,
    grid: PhaseGrid,
    n_per_phase: int,
    seed: int,
    threads: Optional[int] = None,
) -> QuadratureDataset:
    if not isinstance(state, GaussianStateSpec):
        raise TypeError("state must be a GaussianStateSpec")
    if n_per_phase < 1:
        raise ValueError("n_per_phase must be >= 1")

    def draw(k: int) -> np.ndarray:
        sd = math.sqrt(float(quadrature_variance(state, grid.phases[k])))
        return sd * _standard_normals(phase_stream(seed, k, SIMULATION_STREAM), n_per_phase)

    workers = threads or os.cpu_count() or 1
    if workers == 1:
        blocks = [draw(k) for k in range(grid.n_phases)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(draw, range(grid.n_phases)))

    log.info("simulated %d x %d quadratures (seed=%d)", grid.n_phases, n_per_phase, seed)
    return QuadratureDataset(
        phase_grid=grid,
        phase_index=np.repeat(np.arange(grid.n_phases), n_per_phase),
        x=np.concatenate(blocks),
        seed=seed,
        source="simulated",
        state=state,
    )


def sidecar_path(path: PathLike) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".meta.json")


def save_dataset(dataset: QuadratureDataset, path: PathLike) -> Path:
    """Write `phi_rad,x` rows with round-trip precision and a JSON sidecar with the grid.

    Rows keep the dataset's order. `load_dataset` returns samples phase-major (stable within
    a phase), so only phase-major datasets such as `simulate_quadratures` output round-trip
    unchanged.
    """
    p = Path(path)
    rows = np.column_stack([dataset.sample_phases(), dataset.x])
    with p.open("w", encoding="utf-8", newline="\n") as fh:
        np.savetxt(fh, rows, fmt="%.17g", delimiter=",", header=CSV_HEADER, comments="")
    counts = dataset.counts().tolist()
    meta: Dict[str, Any] = {
        "n_phases": dataset.phase_grid.n_phases,
        "phases": list(dataset.phase_grid.phases),
        "per_phase_counts": counts,
        "n_per_phase": counts[0] if len(set(counts)) == 1 else None,
        "seed": dataset.seed,
        "source": dataset.source,
        "state": dataset.state.model_dump() if dataset.state else None,
    }
    sidecar_path(p).write_text(json.dumps(meta, indent=2))
    return p


def _read_sidecar(path: Path) -> Optional[Dict[str, Any]]:
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        return None
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{meta_path.name}: invalid JSON ({exc})") from exc
    if not isinstance(meta, dict) or "phases" not in meta:
        raise DatasetFormatError(f"{meta_path.name}: missing 'phases'")
    return meta


def _match_phases(phi: np.ndarray, grid: PhaseGrid, linenos: np.ndarray) -> np.ndarray:
    table = np.asarray(grid.phases)
    pos = np.clip(np.searchsorted(table, phi), 1, max(table.size - 1, 1))
    lower = pos - 1
    upper = np.minimum(pos, table.size - 1)
    idx = np.where(np.abs(phi - table[lower]) <= np.abs(phi - table[upper]), lower, upper)
    bad = np.flatnonzero(np.abs(phi - table[idx]) > EQUISPACED_TOLERANCE)
    if bad.size:
        i = int(bad[0])
        raise DatasetFormatError(f"phase {phi[i]!r} is not on the sidecar phase grid", int(linenos[i]))
    return idx


def load_dataset(path: PathLike) -> QuadratureDataset:
    """Read a `phi_rad,x` CSV; samples come back sorted phase-major, file order kept within a phase."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Dataset not found: {path}")
    meta = _read_sidecar(p)

    phases: List[float] = []
    xs: List[float] = []
    linenos: List[int] = []
    with p.open("r", encoding="utf-8") as fh:
        header = fh.readline().lstrip("\ufeff").strip()
        if header != CSV_HEADER:
            raise DatasetFormatError(f"malformed header {header!r}, expected {CSV_HEADER!r}", 1)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise DatasetFormatError(f"expected 2 fields, got {len(fields)}", lineno)
            try:
                phi, x = float(fields[0]), float(fields[1])
            except ValueError as exc:
                raise DatasetFormatError(f"non-numeric row {line!r}", lineno) from exc
            if not (0.0 <= phi < math.pi):
                raise DatasetFormatError(f"phase {phi!r} outside [0, pi)", lineno)
            if not math.isfinite(x):
                raise DatasetFormatError(f"non-finite quadrature {fields[1]!r}", lineno)
            phases.append(phi)
            xs.append(x)
            linenos.append(lineno)

    phi_arr = np.asarray(phases, dtype=np.float64)
    line_arr = np.asarray(linenos, dtype=np.int64)
    try:
        if meta is not None:
            grid = PhaseGrid(phases=tuple(float(v) for v in meta["phases"]))
        else:
            if phi_arr.size == 0:
                raise DatasetFormatError("empty dataset without a sidecar; phase grid unknown")
            grid = PhaseGrid(phases=tuple(float(v) for v in np.unique(phi_arr)))
    except ValidationError as exc:
        raise DatasetFormatError(f"invalid phase grid: {exc}") from exc

    index = _match_phases(phi_arr, grid, line_arr) if phi_arr.size else np.zeros(0, dtype=np.int64)
    order = np.argsort(index, kind="stable")
    if meta is not None and meta.get("per_phase_counts") is not None:
        counts = np.bincount(index, minlength=grid.n_phases).tolist()
        if counts != list(meta["per_phase_counts"]):
            raise DatasetFormatError(f"per-phase counts {counts} disagree with sidecar {meta['per_phase_counts']}")

    state = None
    if meta is not None and meta.get("state"):
        state = GaussianStateSpec.model_validate(meta["state"])
    return QuadratureDataset(
        phase_grid=grid,
        phase_index=index[order],
        x=np.asarray(xs, dtype=np.float64)[order],
        seed=meta.get("seed") if meta else None,
        source=meta.get("source", "external") if meta else "external",
        state=state,
    )


__all__ = [
    "CSV_HEADER",
    "SIMULATION_STREAM",
    "DITHER_STREAM",
    "quadrature_variance",
    "phase_stream",
    "simulate_quadratures",
    "sidecar_path",
    "save_dataset",
    "load_dataset",
]
