import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from functools import partial
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

import typer
from pydantic import ValidationError

from .config import load_config
from .errors import DatasetFormatError, NumericGateError, QuasiprobError
from .filter import build_filter_profile
from .gaussian_sim import save_dataset, simulate_quadratures
from .graph import PipelineRequest, run_pipeline
from .manifest import build_manifest, manifest_path, save_manifest
from .models import GaussianStateSpec, GridSpec, PhaseGrid, parse_widths
from .oracle import oracle_discrete_phase, oracle_quasiprob, riemann_sum_quasiprob
from .pattern import build_chi_table, build_dense_chi, evaluate_kernel
from .reporter import (
    build_markdown_report,
    compare_grids,
    kernel_samples,
    read_grid_csv,
    write_grid_csv,
    write_kernel_csv,
    write_oracle_csv,
    write_profile_csv,
    write_scan_csv,
)

log = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

app = typer.Typer(help="Direct sampling of regularized nonclassicality quasiprobabilities from homodyne data.")


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging on stderr")) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _fail(code: int, exc: BaseException) -> None:
    typer.echo(f"error: {exc}", err=True)
    raise typer.Exit(code=code)


@contextmanager
def _exit_codes() -> Iterator[None]:
    try:
        yield
    except NumericGateError as exc:
        _fail(EXIT_NUMERIC, exc)
    except (DatasetFormatError, OSError) as exc:
        _fail(EXIT_IO, exc)
    except (ValidationError, ValueError, QuasiprobError) as exc:
        _fail(EXIT_USAGE, exc)


def _resolve_grid(grid: Optional[str], axis: Optional[str], default: str) -> GridSpec:
    if grid and axis:
        raise ValueError("--grid and --axis are mutually exclusive")
    if axis:
        spec = GridSpec.parse(axis)
        if not spec.is_axis:
            raise ValueError(f"--axis expects a single axis like im:-3,3,0.05, got {axis!r}")
        return spec
    return GridSpec.parse(grid or default)


def _check_positive(name: str, value: Optional[float]) -> None:
    if value is not None and not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive, got {value!r}")


def _write_manifest(output: Path, command: str, flags: Dict[str, Any], started: float, **kwargs: Any) -> None:
    flags = {**flags, "wall_time_s": round(time.monotonic() - started, 3)}
    manifest = build_manifest(command, flags, outputs=[output], **kwargs)
    save_manifest(manifest_path(output), manifest)


@app.command()
def simulate(
    vx: float = typer.Option(..., "--vx", help="Quadrature variance at phi = 0"),
    vp: float = typer.Option(..., "--vp", help="Quadrature variance at phi = pi/2"),
    phases: int = typer.Option(21, "--phases", help="Number of equispaced phases in [0, pi)"),
    n_per_phase: int = typer.Option(100000, "--n-per-phase", help="Samples per phase"),
    seed: int = typer.Option(0, "--seed", help="Simulation seed"),
    out: Path = typer.Option(..., "--out", "-o", help="Dataset CSV path"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker threads (default: cores)"),
) -> None:
    """Simulate homodyne quadratures of a zero-mean Gaussian state."""
    started = time.monotonic()
    with _exit_codes():
        if phases < 1:
            raise ValueError("--phases must be >= 1")
        if n_per_phase < 1:
            raise ValueError("--n-per-phase must be >= 1")
        state = GaussianStateSpec(v_x=vx, v_p=vp)
        dataset = simulate_quadratures(state, PhaseGrid.uniform(phases), n_per_phase, seed, threads=threads)
        save_dataset(dataset, out)
        flags = {"vx": vx, "vp": vp, "phases": phases, "n_per_phase": n_per_phase, "out": str(out)}
        _write_manifest(out, "simulate", flags, started, seeds={"simulation": seed}, dataset=dataset)
    typer.echo(f"Wrote {dataset.n_samples} samples to {out}")


@app.command()
def kernel(
    width: Optional[float] = typer.Option(None, "--width", "-w", help="Filter width"),
    out: Path = typer.Option(..., "--out", "-o", help="Kernel CSV path (xi,chi)"),
    profile_out: Optional[Path] = typer.Option(None, "--profile-out", help="Filter profile CSV path (b,omega)"),
    span: float = typer.Option(30.0, "--span", help="Dump xi in [-span, span]"),
    step: float = typer.Option(0.01, "--step", help="xi spacing"),
    fast_lookup: Optional[bool] = typer.Option(None, "--fast-lookup/--sinc", help="Use the dense spline lookup"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="Run config YAML"),
) -> None:
    """Build the filter and pattern kernel for one width and dump them for plotting."""
    started = time.monotonic()
    with _exit_codes():
        cfg = load_config(config_path)
        w = width if width is not None else cfg.estimate.width
        _check_positive("--width", w)
        _check_positive("--span", span)
        _check_positive("--step", step)
        profile = build_filter_profile(w, cfg.filter.n_nodes)
        table = build_chi_table(
            profile, cfg.kernel.n_coeff, retry_n_coeff=cfg.kernel.retry_n_coeff, accuracy_limit=cfg.kernel.accuracy_limit
        )
        fast = cfg.kernel.fast_lookup if fast_lookup is None else fast_lookup
        lookup = build_dense_chi(table) if fast else table
        xi = kernel_samples(span, step)
        write_kernel_csv(out, xi, evaluate_kernel(lookup, xi))
        if profile_out is not None:
            write_profile_csv(profile_out, profile)
        flags = {"width": w, "span": span, "step": step, "fast_lookup": fast, "n_coeff": table.n_coeff, "config": cfg.model_dump()}
        _write_manifest(out, "kernel", flags, started)
    typer.echo(f"w={w:g} n_coeff={table.n_coeff} accuracy={table.accuracy:.3e}")


@app.command()
def estimate(
    input_path: Path = typer.Option(..., "--in", "-i", help="Dataset CSV"),
    width: Optional[float] = typer.Option(None, "--width", "-w", help="Filter width"),
    grid: Optional[str] = typer.Option(None, "--grid", help="re:a,b,step,im:a,b,step"),
    axis: Optional[str] = typer.Option(None, "--axis", help="Cross-section, e.g. re:-3,3,0.05"),
    dither_seed: Optional[int] = typer.Option(None, "--dither-seed", help="Phase dither seed"),
    out: Path = typer.Option(..., "--out", "-o", help="Grid CSV path"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker threads (default: cores)"),
    fast_lookup: Optional[bool] = typer.Option(None, "--fast-lookup/--sinc", help="Use the dense spline lookup"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="Run config YAML"),
) -> None:
    """Estimate P_Omega on a grid of phase-space points."""
    started = time.monotonic()
    with _exit_codes():
        cfg = load_config(config_path)
        _check_positive("--width", width)
        spec = _resolve_grid(grid, axis, cfg.estimate.axis)
        request = PipelineRequest(
            dataset_path=str(input_path),
            mode="estimate",
            config=cfg,
            grid=spec,
            width=width,
            dither_seed=dither_seed,
            threads=threads,
            fast_kernel=fast_lookup,
        )
        result = run_pipeline(request)
        write_grid_csv(out, result.grid)
        flags = {
            "in": str(input_path),
            "width": request.resolved_width,
            "grid": spec.text,
            "threads": request.resolved_threads,
            "fast_lookup": request.resolved_fast,
            "n_coeff": result.table.n_coeff,
            "config": cfg.model_dump(),
        }
        _write_manifest(
            out,
            "estimate",
            flags,
            started,
            seeds={"dither": request.resolved_seed, "simulation": result.dataset.seed},
            dataset=result.dataset,
        )
    if result.sigma is None:
        typer.echo("sigma=undefined")
    else:
        typer.echo(f"sigma={result.sigma:.6g} argmin_re={result.argmin.real:.12g} argmin_im={result.argmin.imag:.12g}")


@app.command()
def scan(
    input_path: Path = typer.Option(..., "--in", "-i", help="Dataset CSV"),
    widths: Optional[str] = typer.Option(None, "--widths", help="start:stop:step or comma list"),
    grid: Optional[str] = typer.Option(None, "--grid", help="re:a,b,step,im:a,b,step"),
    axis: Optional[str] = typer.Option(None, "--axis", help="Cross-section, e.g. re:-3,3,0.05"),
    dither_seed: Optional[int] = typer.Option(None, "--dither-seed", help="Phase dither seed"),
    out: Path = typer.Option(..., "--out", "-o", help="Scan CSV path"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker threads (default: cores)"),
    fast_lookup: Optional[bool] = typer.Option(None, "--fast-lookup/--sinc", help="Use the dense spline lookup"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="Run config YAML"),
) -> None:
    """Significance Sigma(w) over a range of filter widths."""
    started = time.monotonic()
    with _exit_codes():
        cfg = load_config(config_path)
        width_list = parse_widths(widths or cfg.scan.widths)
        spec = _resolve_grid(grid, axis, cfg.estimate.axis)
        request = PipelineRequest(
            dataset_path=str(input_path),
            mode="scan",
            config=cfg,
            grid=spec,
            widths=width_list,
            dither_seed=dither_seed,
            threads=threads,
            fast_kernel=fast_lookup,
        )
        result = run_pipeline(request)
        write_scan_csv(out, result.scan)
        flags = {
            "in": str(input_path),
            "widths": width_list,
            "grid": spec.text,
            "threads": request.resolved_threads,
            "fast_lookup": request.resolved_fast,
            "config": cfg.model_dump(),
        }
        _write_manifest(
            out,
            "scan",
            flags,
            started,
            seeds={"dither": request.resolved_seed, "simulation": result.dataset.seed},
            dataset=result.dataset,
        )
    best = result.scan.optimum
    if best is None:
        typer.echo("optimum=none")
    else:
        typer.echo(f"optimum w={best.width:g} sigma={best.sigma:.6g} argmin_re={best.argmin_re:.12g} argmin_im={best.argmin_im:.12g}")


@app.command()
def oracle(
    vx: float = typer.Option(..., "--vx", help="Quadrature variance at phi = 0"),
    vp: float = typer.Option(..., "--vp", help="Quadrature variance at phi = pi/2"),
    width: Optional[float] = typer.Option(None, "--width", "-w", help="Filter width"),
    grid: Optional[str] = typer.Option(None, "--grid", help="re:a,b,step,im:a,b,step"),
    axis: Optional[str] = typer.Option(None, "--axis", help="Cross-section, e.g. re:-3,3,0.05"),
    phases: Optional[int] = typer.Option(None, "--phases", help="Discrete-phase oracle for N equispaced phases"),
    riemann: bool = typer.Option(False, "--riemann", help="Naive phase sum (negative control); needs --phases"),
    out: Path = typer.Option(..., "--out", "-o", help="Oracle grid CSV path"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker threads (default: cores)"),
    config_path: Optional[str] = typer.Option(None, "--config", "-c", help="Run config YAML"),
) -> None:
    """Deterministic P_Omega for a Gaussian state on a grid."""
    started = time.monotonic()
    with _exit_codes():
        cfg = load_config(config_path)
        w = width if width is not None else cfg.estimate.width
        _check_positive("--width", w)
        if phases is not None and phases < 1:
            raise ValueError("--phases must be >= 1")
        if riemann and phases is None:
            raise ValueError("--riemann needs --phases")
        spec = _resolve_grid(grid, axis, cfg.estimate.axis)
        state = GaussianStateSpec(v_x=vx, v_p=vp)
        profile = build_filter_profile(w, cfg.filter.n_nodes)
        alphas = spec.points()

        if riemann:
            evaluate = partial(riemann_sum_quasiprob, state, w=w, n_phases=phases, cfg=cfg.oracle, profile=profile)
        elif phases is not None:
            evaluate = partial(oracle_discrete_phase, state, w=w, n_phases=phases, cfg=cfg.oracle, profile=profile)
        else:
            evaluate = partial(oracle_quasiprob, state, w=w, cfg=cfg.oracle, profile=profile)
        workers = threads or cfg.estimate.threads
        values = _map_points(evaluate, alphas, workers)

        systematic: Optional[List[float]] = None
        if phases is not None and not riemann:
            continuous = partial(oracle_quasiprob, state, w=w, cfg=cfg.oracle, profile=profile)
            systematic = [abs(c - d) for c, d in zip(_map_points(continuous, alphas, workers), values)]
        write_oracle_csv(out, list(zip(alphas, values)), systematic)
        flags = {
            "vx": vx,
            "vp": vp,
            "width": w,
            "grid": spec.text,
            "phases": phases,
            "riemann": riemann,
            "config": cfg.model_dump(),
        }
        _write_manifest(out, "oracle", flags, started)
    typer.echo(f"Wrote {len(values)} oracle points to {out}")


def _map_points(evaluate: Any, alphas: List[complex], threads: Optional[int]) -> List[float]:
    if threads == 1 or len(alphas) == 1:
        return [evaluate(a) for a in alphas]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(evaluate, alphas))


@app.command()
def compare(
    sampled: Path = typer.Option(..., "--sampled", help="Sampled grid CSV"),
    oracle_path: Path = typer.Option(..., "--oracle", help="Oracle grid CSV"),
    out: Path = typer.Option(..., "--out", "-o", help="Comparison report JSON"),
    threshold: float = typer.Option(4.0, "--threshold", help="|z| limit counted as agreement"),
) -> None:
    """Per-point z-scores of a sampled grid against an oracle grid."""
    started = time.monotonic()
    with _exit_codes():
        _check_positive("--threshold", threshold)
        report = compare_grids(read_grid_csv(sampled), read_grid_csv(oracle_path), threshold)
        out.write_text(json.dumps(report.model_dump(mode="json"), indent=2))
        flags = {"sampled": str(sampled), "oracle": str(oracle_path), "threshold": threshold}
        _write_manifest(out, "compare", flags, started)
    typer.echo(build_markdown_report(report))


if __name__ == "__main__":
    app()
