"""Per-model input adaptation: resolution, frame rate, and long-video windowing.

Each evaluated model declares its recommended input spec; videos are adapted
in a fixed order (decode -> FPS resample -> resolution adapt -> window) and
that order is recorded in run reports.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .catalog import FrameSequence
from .lineio import read_lines

PIPELINE_ORDER = "decode,fps_resample,resolution_adapt,window"


@dataclass(frozen=True)
class ResolutionMode:
    """Either one fixed (width, height) or a set of aspect-ratio buckets."""

    mode: str  # "fixed" | "buckets"
    sizes: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.mode not in ("fixed", "buckets"):
            raise ValueError(f"unknown resolution mode {self.mode!r}")
        if not self.sizes:
            raise ValueError("resolution mode needs at least one (width, height) entry")
        if self.mode == "fixed" and len(self.sizes) != 1:
            raise ValueError("fixed resolution mode takes exactly one size")
        for w, h in self.sizes:
            if w <= 0 or h <= 0:
                raise ValueError(f"non-positive resolution entry ({w}, {h})")


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    family: str
    params_billions: float
    release_date: str  # ISO date
    operating_space: str  # "latent" | "pixel"
    resolution_mode: ResolutionMode
    frame_window: int
    target_fps: float
    diffusion_steps_T: int
    adapter: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.frame_window < 2:
            raise ValueError(f"model '{self.model_id}': frame_window must be >= 2")
        if self.target_fps <= 0:
            raise ValueError(f"model '{self.model_id}': target_fps must be > 0")
        if self.diffusion_steps_T < 2:
            raise ValueError(f"model '{self.model_id}': diffusion_steps_T must be >= 2")


def load_model_registry(path) -> dict[str, ModelSpec]:
    """Load the per-model spec registry (one JSON object per line)."""
    specs: dict[str, ModelSpec] = {}
    for obj in read_lines(Path(path)):
        rm = obj["resolution_mode"]
        if isinstance(rm, dict) and len(rm) == 1:
            mode, sizes = next(iter(rm.items()))
        else:
            raise ValueError(f"resolution_mode must be a single-key object, got {rm!r}")
        if mode == "fixed" and sizes and isinstance(sizes[0], (int, float)):
            sizes = [sizes]
        spec = ModelSpec(
            model_id=str(obj["model_id"]),
            family=str(obj["family"]),
            params_billions=float(obj["params_billions"]),
            release_date=str(obj["release_date"]),
            operating_space=str(obj["operating_space"]),
            resolution_mode=ResolutionMode(mode=mode, sizes=tuple((int(w), int(h)) for w, h in sizes)),
            frame_window=int(obj["frame_window"]),
            target_fps=float(obj["target_fps"]),
            diffusion_steps_T=int(obj["diffusion_steps_T"]),
            adapter=obj.get("adapter", {}),
        )
        if spec.model_id in specs:
            raise ValueError(f"duplicate model_id '{spec.model_id}' in registry")
        specs[spec.model_id] = spec
    return specs


def _round_even(x: float) -> int:
    """Nearest even integer; codec-friendly dimensions."""
    return max(2, int(round(x / 2.0)) * 2)


def _pick_bucket(width: int, height: int, sizes: tuple[tuple[int, int], ...]) -> tuple[int, int]:
    """Bucket minimizing |log AR_in - log AR_bucket|; ties go to the larger area."""
    ar_in = math.log(width / height)
    best = None
    for w, h in sizes:
        dist = abs(ar_in - math.log(w / h))
        area = w * h
        key = (dist, -area)
        if best is None or key < best[0]:
            best = (key, (w, h))
    return best[1]


def adapt_resolution(seq: FrameSequence, spec: ModelSpec) -> FrameSequence:
    """Rescale so the shorter side matches the target short side, then center-crop.

    Scaling is aspect-preserving (one scale factor for both axes, dimensions
    rounded to the nearest even integer). For bucketed models the bucket
    closest to the input aspect ratio in log space is chosen first. If the
    input's orientation differs from the target's, the scale is raised so the
    crop window still fits.
    """
    t, h_in, w_in = seq.frames.shape[0], seq.height, seq.width
    if spec.resolution_mode.mode == "fixed":
        w_t, h_t = spec.resolution_mode.sizes[0]
    else:
        w_t, h_t = _pick_bucket(w_in, h_in, spec.resolution_mode.sizes)
    if (w_in, h_in) == (w_t, h_t):
        return seq
    scale = max(w_t / w_in, h_t / h_in)
    w_s = max(w_t, _round_even(w_in * scale))
    h_s = max(h_t, _round_even(h_in * scale))

    import cv2

    resized = np.empty((t, h_s, w_s, seq.frames.shape[3]), dtype=np.float32)
    for i in range(t):
        out = cv2.resize(seq.frames[i], (w_s, h_s), interpolation=cv2.INTER_AREA)
        resized[i] = out if out.ndim == 3 else out[..., None]
    y0 = (h_s - h_t) // 2
    x0 = (w_s - w_t) // 2
    cropped = resized[:, y0 : y0 + h_t, x0 : x0 + w_t, :]
    return FrameSequence(
        frames=np.ascontiguousarray(np.clip(cropped, 0.0, 1.0)),
        direction=seq.direction,
        source_video_id=seq.source_video_id,
    )


def resample_indices(num_frames: int, fps_in: float, fps_out: float) -> list[int]:
    """Nearest-frame index map for FPS resampling.

    Output frame k samples input frame nearest(k * fps_in / fps_out), with
    halves resolved toward the earlier frame and indices clamped to range.
    Output length is nearest(num_frames * fps_out / fps_in), at least 2.
    """
    if fps_in <= 0 or fps_out <= 0:
        raise ValueError("frame rates must be positive")
    ratio = fps_in / fps_out
    count = max(2, int(math.ceil(num_frames / ratio - 0.5)))
    return [min(num_frames - 1, max(0, int(math.ceil(k * ratio - 0.5)))) for k in range(count)]


def resample_fps(seq: FrameSequence, fps_in: float, fps_out: float) -> FrameSequence:
    """Resample to the model's prescribed frame rate by nearest-frame pick.

    No interpolation: every output frame is one of the input frames, so no
    frame is synthesized that neither direction contains.
    """
    if fps_in == fps_out:
        return seq
    idx = resample_indices(seq.num_frames, fps_in, fps_out)
    return FrameSequence(
        frames=np.ascontiguousarray(seq.frames[idx]),
        direction=seq.direction,
        source_video_id=seq.source_video_id,
    )


@dataclass(frozen=True)
class Window:
    start: int
    end: int  # exclusive
    context_prefix_len: int

    @property
    def length(self) -> int:
        return self.end - self.start

    @property
    def counted_range(self) -> tuple[int, int]:
        """Frame range whose loss is accumulated (context excluded)."""
        return (self.start + self.context_prefix_len, self.end)


@dataclass(frozen=True)
class WindowPlan:
    windows: tuple[Window, ...]
    total_frames: int

    def counted_frames(self) -> list[int]:
        out: list[int] = []
        for w in self.windows:
            out.extend(range(*w.counted_range))
        return out


def plan_windows(total_frames: int, frame_window: int) -> WindowPlan:
    """Split a long video into consecutive frame-window-sized segments.

    A short final segment is padded by prepending frames from the preceding
    segment as temporal context; context frames are excluded from loss
    accumulation, so the loss-counted frames tile [0, total_frames) exactly
    once. A video shorter than the window becomes a single short window.
    """
    if total_frames < 2:
        raise ValueError("total_frames must be >= 2")
    if frame_window < 2:
        raise ValueError("frame_window must be >= 2")
    if total_frames <= frame_window:
        return WindowPlan(windows=(Window(0, total_frames, 0),), total_frames=total_frames)
    windows: list[Window] = []
    full = total_frames // frame_window
    for i in range(full):
        windows.append(Window(i * frame_window, (i + 1) * frame_window, 0))
    remainder = total_frames - full * frame_window
    if remainder:
        context = frame_window - remainder
        windows.append(Window(total_frames - frame_window, total_frames, context))
    return WindowPlan(windows=tuple(windows), total_frames=total_frames)


def preprocess_sequence(seq: FrameSequence, spec: ModelSpec, fps_native: float) -> FrameSequence:
    """Full adaptation pipeline in the fixed order (FPS first, then resolution)."""
    seq = resample_fps(seq, fps_native, spec.target_fps)
    return adapt_resolution(seq, spec)
