import numpy as np
import pytest

from yocausal.catalog import Catalog, SubsetManifest, VideoRecord
from yocausal.probe.synthetic import write_toy_subset


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" in rep.nodeid and rep.when == "call":
                name = rep.nodeid.split("::")[-1]
                lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, verdict in lines:
            terminalreporter.write_line(f"{verdict}  {name}")


@pytest.fixture(scope="session")
def toy_catalog_small(tmp_path_factory):
    """A small synthetic catalog (4 subsets x 6 clips) backed by .npy files."""
    root = tmp_path_factory.mktemp("toy-catalog")
    subsets, records = [], []
    for kind in ("shatter", "smoke", "drift", "palindrome"):
        sub, recs = write_toy_subset(root / kind, kind, 6, seed=101, subset_id=kind)
        subsets.append(sub)
        records.extend(recs)
    return Catalog(subsets=subsets, records=records)


@pytest.fixture()
def indexed_clip(tmp_path):
    """A 16-frame clip whose every pixel equals its frame index (uint8)."""
    frames = np.stack([np.full((32, 32), i, np.uint8) for i in range(16)])
    path = tmp_path / "indexed.npy"
    np.save(path, frames)
    record = VideoRecord(
        video_id="indexed",
        subset_id="s1",
        uri=str(path),
        caption="frames carrying their own index",
        duration_s=2.0,
        fps_native=8.0,
        num_frames=16,
        width=32,
        height=32,
    )
    return record, frames


def make_record(video_id: str, subset_id: str, uri: str, num_frames: int = 16, caption: str = "cap") -> VideoRecord:
    return VideoRecord(
        video_id=video_id,
        subset_id=subset_id,
        uri=uri,
        caption=caption,
        duration_s=num_frames / 8.0,
        fps_native=8.0,
        num_frames=num_frames,
        width=32,
        height=32,
    )
