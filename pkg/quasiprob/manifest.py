import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import numpy as np

from .models import QuadratureDataset, RunManifest

TRACKED_PACKAGES = ("quasiprob", "numpy", "scipy", "pydantic", "typer", "langgraph", "pyyaml")

PathLike = Union[str, Path]


def dataset_fingerprint(dataset: QuadratureDataset) -> str:
    """SHA-256 over the phase grid and the sample arrays in storage order."""
    digest = hashlib.sha256()
    digest.update(np.asarray(dataset.phase_grid.phases, dtype="<f8").tobytes())
    digest.update(np.ascontiguousarray(dataset.phase_index, dtype="<i8").tobytes())
    digest.update(np.ascontiguousarray(dataset.x, dtype="<f8").tobytes())
    return digest.hexdigest()


def package_versions(names: Iterable[str] = TRACKED_PACKAGES) -> Dict[str, str]:
    versions: Dict[str, str] = {}
    for name in names:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def build_manifest(
    command: str,
    flags: Dict[str, Any],
    *,
    seeds: Optional[Dict[str, Optional[int]]] = None,
    dataset: Optional[QuadratureDataset] = None,
    outputs: Iterable[PathLike] = (),
) -> RunManifest:
    return RunManifest(
        command=command,
        flags=flags,
        seeds=seeds or {},
        dataset_sha256=dataset_fingerprint(dataset) if dataset is not None else None,
        versions=package_versions(),
        outputs=[str(p) for p in outputs],
        created_at=datetime.now(timezone.utc).isoformat(),
    )


def manifest_path(output: PathLike) -> Path:
    p = Path(output)
    return p.with_name(p.name + ".manifest.json")


def save_manifest(path: PathLike, manifest: RunManifest) -> Path:
    """Write atomically: a reader sees either the old manifest or the complete new one."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=p.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True))
        os.replace(tmp, p)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return p


def load_manifest(path: PathLike) -> RunManifest:
    return RunManifest.model_validate(json.loads(Path(path).read_text()))


__all__ = [
    "dataset_fingerprint",
    "package_versions",
    "build_manifest",
    "manifest_path",
    "save_manifest",
    "load_manifest",
]
