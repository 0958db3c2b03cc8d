import logging
from typing import List, Literal, Optional, TypedDict

from langgraph.graph import END, StateGraph
from pydantic import BaseModel, ConfigDict, Field

from .config import RunConfig
from .errors import DegenerateEstimateError
from .estimator import estimate_grid, scan_width, significance
from .filter import build_filter_profile
from .gaussian_sim import load_dataset
from .models import ChiTable, FilterProfile, GridSpec, QuadratureDataset, QuasiprobGrid, WidthScanResult
from .pattern import Kernel, build_chi_table, build_dense_chi

log = logging.getLogger(__name__)

PipelineMode = Literal["estimate", "scan"]


class PipelineRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    dataset_path: str
    mode: PipelineMode = "estimate"
    config: RunConfig = Field(default_factory=RunConfig)
    grid: GridSpec
    width: Optional[float] = None
    widths: List[float] = Field(default_factory=list)
    dither_seed: Optional[int] = None
    threads: Optional[int] = None
    fast_kernel: Optional[bool] = None

    @property
    def resolved_width(self) -> float:
        return self.width if self.width is not None else self.config.estimate.width

    @property
    def resolved_seed(self) -> int:
        return self.dither_seed if self.dither_seed is not None else self.config.estimate.dither_seed

    @property
    def resolved_threads(self) -> Optional[int]:
        return self.threads if self.threads is not None else self.config.estimate.threads

    @property
    def resolved_fast(self) -> bool:
        return self.fast_kernel if self.fast_kernel is not None else self.config.kernel.fast_lookup


class PipelineResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    dataset: Optional[QuadratureDataset] = None
    profile: Optional[FilterProfile] = None
    table: Optional[ChiTable] = None
    grid: Optional[QuasiprobGrid] = None
    sigma: Optional[float] = None
    argmin: Optional[complex] = None
    scan: Optional[WidthScanResult] = None


class GraphState(TypedDict, total=False):
    dataset: QuadratureDataset
    profile: FilterProfile
    table: ChiTable
    kernel: Kernel
    grid: QuasiprobGrid
    sigma: Optional[float]
    argmin: Optional[complex]
    scan: WidthScanResult


def build_graph(request: PipelineRequest):
    """Create and compile the LangGraph for the estimate / scan workflow."""
    cfg = request.config

    def load_dataset_node(state: GraphState) -> GraphState:
        return {"dataset": load_dataset(request.dataset_path)}

    def route(state: GraphState) -> str:
        return "scan" if request.mode == "scan" else "build_filter"

    def build_filter_node(state: GraphState) -> GraphState:
        return {"profile": build_filter_profile(request.resolved_width, cfg.filter.n_nodes)}

    def build_kernel_node(state: GraphState) -> GraphState:
        table = build_chi_table(
            state["profile"],
            cfg.kernel.n_coeff,
            retry_n_coeff=cfg.kernel.retry_n_coeff,
            accuracy_limit=cfg.kernel.accuracy_limit,
        )
        kernel: Kernel = build_dense_chi(table) if request.resolved_fast else table
        return {"table": table, "kernel": kernel}

    def estimate_node(state: GraphState) -> GraphState:
        grid = estimate_grid(
            state["dataset"],
            state["kernel"],
            request.grid,
            request.resolved_seed,
            threads=request.resolved_threads,
        )
        return {"grid": grid}

    def significance_node(state: GraphState) -> GraphState:
        try:
            sigma, argmin = significance(state["grid"])
        except DegenerateEstimateError as exc:
            log.warning("significance undefined: %s", exc)
            return {"sigma": None, "argmin": None}
        return {"sigma": sigma, "argmin": argmin}

    def scan_node(state: GraphState) -> GraphState:
        result = scan_width(
            state["dataset"],
            request.widths,
            request.grid,
            request.resolved_seed,
            n_nodes=cfg.filter.n_nodes,
            n_coeff=cfg.kernel.n_coeff,
            retry_n_coeff=cfg.kernel.retry_n_coeff,
            accuracy_limit=cfg.kernel.accuracy_limit,
            fast_kernel=request.resolved_fast,
            threads=request.resolved_threads,
        )
        return {"scan": result}

    graph = StateGraph(GraphState)
    graph.add_node("load_dataset", load_dataset_node)
    graph.add_node("build_filter", build_filter_node)
    graph.add_node("build_kernel", build_kernel_node)
    graph.add_node("estimate", estimate_node)
    graph.add_node("significance", significance_node)
    graph.add_node("scan", scan_node)

    graph.set_entry_point("load_dataset")
    graph.add_conditional_edges("load_dataset", route, {"build_filter": "build_filter", "scan": "scan"})
    graph.add_edge("build_filter", "build_kernel")
    graph.add_edge("build_kernel", "estimate")
    graph.add_edge("estimate", "significance")
    graph.add_edge("significance", END)
    graph.add_edge("scan", END)

    return graph.compile()


def run_pipeline(request: PipelineRequest) -> PipelineResult:
    """Execute the graph and return the collected artifacts."""
    app = build_graph(request)
    result_state = app.invoke({})
    return PipelineResult(
        dataset=result_state.get("dataset"),
        profile=result_state.get("profile"),
        table=result_state.get("table"),
        grid=result_state.get("grid"),
        sigma=result_state.get("sigma"),
        argmin=result_state.get("argmin"),
        scan=result_state.get("scan"),
    )


__all__ = ["PipelineRequest", "PipelineResult", "GraphState", "build_graph", "run_pipeline"]
