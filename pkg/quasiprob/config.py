from pathlib import Path
from typing import Optional

import yaml
from pydantic import BaseModel, Field, ValidationError, model_validator


class FilterSettings(BaseModel):
    n_nodes: int = Field(2048, ge=64)


class KernelSettings(BaseModel):
    n_coeff: int = Field(256, ge=16)
    retry_n_coeff: int = Field(512, ge=16)
    accuracy_limit: float = Field(3.5e-5, gt=0)
    fast_lookup: bool = True


class EstimateSettings(BaseModel):
    width: float = Field(1.3, gt=0)
    dither_seed: int = Field(0, ge=0)
    axis: str = "re:-3,3,0.05"
    grid: str = "re:-3,3,0.1,im:-3,3,0.1"
    threads: Optional[int] = Field(None, ge=1)


class ScanSettings(BaseModel):
    widths: str = "0.7:2.0:0.1"


class OracleConfig(BaseModel):
    """Resolution of the deterministic reference integrals; `None` picks the count automatically."""

    b_max: Optional[float] = Field(None, gt=0)
    radial_nodes: Optional[int] = Field(None, ge=16)
    angular_nodes: Optional[int] = Field(None, ge=1)
    tolerance: float = Field(1e-7, gt=0)


class RunConfig(BaseModel):
    filter: FilterSettings = Field(default_factory=FilterSettings)
    kernel: KernelSettings = Field(default_factory=KernelSettings)
    estimate: EstimateSettings = Field(default_factory=EstimateSettings)
    scan: ScanSettings = Field(default_factory=ScanSettings)
    oracle: OracleConfig = Field(default_factory=OracleConfig)

    @model_validator(mode="after")
    def validate_retry(self) -> "RunConfig":
        if self.kernel.retry_n_coeff < self.kernel.n_coeff:
            raise ValueError("kernel.retry_n_coeff must be >= kernel.n_coeff")
        return self


def load_config(config_path: Optional[str] = None) -> RunConfig:
    """Load and validate a YAML run config; no path means built-in defaults."""
    if config_path is None:
        return RunConfig()
    path = Path(config_path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")
    raw = yaml.safe_load(path.read_text()) or {}
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ValueError(f"Invalid run config: {exc}") from exc


__all__ = [
    "RunConfig",
    "FilterSettings",
    "KernelSettings",
    "EstimateSettings",
    "ScanSettings",
    "OracleConfig",
    "load_config",
]
