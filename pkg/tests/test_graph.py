from quasiprob.config import RunConfig
from quasiprob.gaussian_sim import save_dataset
from quasiprob.graph import PipelineRequest, run_pipeline
from quasiprob.models import GridSpec


def test_estimate_pipeline_runs_end_to_end(tmp_path, squeezed_data):
    path = save_dataset(squeezed_data.truncate(2000), tmp_path / "sq.csv")
    request = PipelineRequest(dataset_path=str(path), grid=GridSpec.parse("re:0,2,0.2"), threads=2)
    result = run_pipeline(request)
    assert result.table.width == 1.3
    assert len(result.grid.points) == 11
    assert result.sigma is not None and result.argmin is not None
    assert result.scan is None


def test_scan_pipeline_branches(tmp_path, squeezed_data):
    path = save_dataset(squeezed_data.truncate(2000), tmp_path / "sq.csv")
    request = PipelineRequest(
        dataset_path=str(path),
        mode="scan",
        config=RunConfig(),
        grid=GridSpec.parse("re:0,2,0.2"),
        widths=[1.2, 1.3],
    )
    result = run_pipeline(request)
    assert [e.width for e in result.scan.entries] == [1.2, 1.3]
    assert result.grid is None and result.table is None
