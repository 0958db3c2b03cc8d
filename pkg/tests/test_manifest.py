import json

from quasiprob.gaussian_sim import simulate_quadratures
from quasiprob.manifest import (
    build_manifest,
    dataset_fingerprint,
    load_manifest,
    manifest_path,
    save_manifest,
)
from quasiprob.models import PhaseGrid


def test_manifest_save_and_load(tmp_path, vacuum):
    data = simulate_quadratures(vacuum, PhaseGrid.uniform(3), 10, seed=1)
    out = tmp_path / "grid.csv"
    manifest = build_manifest("estimate", {"width": 1.3}, seeds={"dither": 0}, dataset=data, outputs=[out])
    path = save_manifest(manifest_path(out), manifest)
    assert path.name == "grid.csv.manifest.json"
    loaded = load_manifest(path)
    assert loaded == manifest
    assert loaded.dataset_sha256 == dataset_fingerprint(data)
    assert "numpy" in loaded.versions
    assert not list(tmp_path.glob("*.tmp"))


def test_manifest_overwrite_is_complete(tmp_path):
    path = tmp_path / "m.json"
    save_manifest(path, build_manifest("simulate", {"phases": 21}))
    save_manifest(path, build_manifest("simulate", {"phases": 7}))
    assert json.loads(path.read_text())["flags"] == {"phases": 7}


def test_fingerprint_tracks_content(vacuum):
    grid = PhaseGrid.uniform(4)
    a = simulate_quadratures(vacuum, grid, 20, seed=1)
    b = simulate_quadratures(vacuum, grid, 20, seed=1)
    c = simulate_quadratures(vacuum, grid, 20, seed=2)
    assert dataset_fingerprint(a) == dataset_fingerprint(b)
    assert dataset_fingerprint(a) != dataset_fingerprint(c)
    assert len(dataset_fingerprint(a)) == 64
