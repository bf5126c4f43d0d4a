import numpy as np
import pytest

from yocausal.catalog import FrameSequence
from yocausal.preprocess import (
    ModelSpec,
    ResolutionMode,
    adapt_resolution,
    load_model_registry,
    plan_windows,
    resample_fps,
    resample_indices,
)


def seq_of(width, height, t=4, channels=3):
    rng = np.random.default_rng(0)
    frames = rng.uniform(0, 1, size=(t, height, width, channels)).astype(np.float32)
    return FrameSequence(frames=frames, direction="forward", source_video_id="x")


def spec_with(resolution: ResolutionMode, frame_window=16, fps=8.0) -> ModelSpec:
    return ModelSpec(
        model_id="m",
        family="f",
        params_billions=1.0,
        release_date="2024-01-01",
        operating_space="pixel",
        resolution_mode=resolution,
        frame_window=frame_window,
        target_fps=fps,
        diffusion_steps_T=1000,
    )


class TestAdaptResolution:
    def test_fixed_1920x1080_to_480(self):
        # shorter side 1080 -> 480, width lands on the even 854, then center crop
        spec = spec_with(ResolutionMode("fixed", ((480, 480),)))
        out = adapt_resolution(seq_of(1920, 1080, t=2), spec)
        assert (out.width, out.height) == (480, 480)

    def test_identity_when_already_at_target(self):
        spec = spec_with(ResolutionMode("fixed", ((64, 48),)))
        seq = seq_of(64, 48)
        out = adapt_resolution(seq, spec)
        assert out.frames is seq.frames

    def test_bucket_chooses_closest_log_aspect(self):
        spec = spec_with(ResolutionMode("buckets", ((832, 480), (480, 832))))
        out = adapt_resolution(seq_of(1280, 720, t=2), spec)
        assert (out.width, out.height) == (832, 480)

    def test_bucket_tie_breaks_to_larger_area(self):
        # same aspect ratio, different sizes: equidistant in log-AR space
        spec = spec_with(ResolutionMode("buckets", ((400, 300), (800, 600))))
        out = adapt_resolution(seq_of(1024, 768, t=2), spec)
        assert (out.width, out.height) == (800, 600)

    def test_aspect_preserved_before_crop(self):
        # a square target from a 2:1 input must crop width, not squash it
        spec = spec_with(ResolutionMode("fixed", ((100, 100),)))
        frames = np.zeros((2, 200, 400, 1), dtype=np.float32)
        frames[:, :, :200, :] = 1.0  # left half bright
        out = adapt_resolution(FrameSequence(frames, "forward", "x"), spec)
        assert (out.width, out.height) == (100, 100)
        # crop is centered: the in-crop boundary column stays at the middle
        assert out.frames[0, 0, :40].mean() > 0.9
        assert out.frames[0, 0, 60:].mean() < 0.1

    def test_portrait_input_landscape_target(self):
        spec = spec_with(ResolutionMode("fixed", ((832, 480),)))
        out = adapt_resolution(seq_of(480, 832, t=2), spec)
        assert (out.width, out.height) == (832, 480)


class TestResampleFps:
    def test_identity(self):
        seq = seq_of(16, 16, t=10)
        out = resample_fps(seq, 12.0, 12.0)
        assert out.frames is seq.frames

    def test_downsample_30_to_15(self):
        assert resample_indices(10, 30, 15) == [0, 2, 4, 6, 8]

    def test_upsample_15_to_30_duplicates(self):
        assert resample_indices(4, 15, 30) == [0, 0, 1, 1, 2, 2, 3, 3]

    def test_minimum_two_frames(self):
        assert len(resample_indices(2, 100, 1)) == 2

    def test_applies_index_map(self):
        seq = seq_of(8, 8, t=10)
        out = resample_fps(seq, 30, 15)
        assert np.array_equal(out.frames, seq.frames[[0, 2, 4, 6, 8]])


class TestPlanWindows:
    def test_37_over_16(self):
        plan = plan_windows(37, 16)
        spans = [(w.start, w.end, w.context_prefix_len) for w in plan.windows]
        assert spans == [(0, 16, 0), (16, 32, 0), (21, 37, 11)]
        assert plan.windows[-1].counted_range == (32, 37)

    def test_exact_fit(self):
        plan = plan_windows(16, 16)
        assert [(w.start, w.end, w.context_prefix_len) for w in plan.windows] == [(0, 16, 0)]

    def test_short_video_single_window(self):
        plan = plan_windows(10, 16)
        assert [(w.start, w.end, w.context_prefix_len) for w in plan.windows] == [(0, 10, 0)]

    def test_tiling_property_random(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            total = int(rng.integers(2, 400))
            window = int(rng.integers(2, 64))
            plan = plan_windows(total, window)
            assert plan.counted_frames() == list(range(total))
            for w in plan.windows:
                if total >= window:
                    assert w.length == window

    def test_direction_symmetric_structure(self):
        # equal lengths give structurally identical plans regardless of direction
        assert plan_windows(37, 16) == plan_windows(37, 16)


def test_load_model_registry(tmp_path):
    lines = [
        '{"model_id": "a", "family": "fam", "params_billions": 1.3, "release_date": "2025-02-01",'
        ' "operating_space": "latent", "resolution_mode": {"fixed": [480, 480]}, "frame_window": 81,'
        ' "target_fps": 16, "diffusion_steps_T": 1000}',
        '{"model_id": "b", "family": "fam", "params_billions": 14, "release_date": "2025-07-01",'
        ' "operating_space": "latent", "resolution_mode": {"buckets": [[832, 480], [480, 832]]},'
        ' "frame_window": 81, "target_fps": 16, "diffusion_steps_T": 1000}',
    ]
    path = tmp_path / "models.jsonl"
    path.write_text("\n".join(lines) + "\n")
    registry = load_model_registry(path)
    assert registry["a"].resolution_mode.mode == "fixed"
    assert registry["b"].resolution_mode.sizes == ((832, 480), (480, 832))


def test_model_spec_validation():
    with pytest.raises(ValueError):
        spec_with(ResolutionMode("fixed", ((480, 480),)), frame_window=1)
    with pytest.raises(ValueError):
        ResolutionMode("fixed", ())
