"""Extensible video catalog: thematic subsets, clip metadata, frame decoding.

The catalog is a line-delimited manifest: a header block of subset
declarations followed by one video record per line, so new subsets can be
appended without rewriting the file. Decoding yields float32 frames in [0,1];
temporal reversal happens on decoded pixel frames.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .lineio import dumps_line, read_lines

Direction = Literal["forward", "reversed"]


class CatalogError(ValueError):
    """Raised for manifest or media validation failures."""


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    subset_id: str
    uri: str
    caption: str
    duration_s: float
    fps_native: float
    num_frames: int
    width: int
    height: int

    def validate(self, require_caption: bool = True) -> None:
        if not self.video_id:
            raise CatalogError("record with empty video_id")
        if self.num_frames < 2:
            raise CatalogError(
                f"record '{self.video_id}': num_frames={self.num_frames} < 2, "
                "a one-frame clip has no temporal direction"
            )
        if self.fps_native <= 0:
            raise CatalogError(f"record '{self.video_id}': fps_native must be > 0")
        if self.width <= 0 or self.height <= 0:
            raise CatalogError(f"record '{self.video_id}': non-positive frame size")
        if require_caption and not self.caption:
            raise CatalogError(
                f"record '{self.video_id}': empty caption (only allowed when the "
                "probe runs with prompt_mode=null)"
            )
        # Container metadata rounds durations; allow one frame period of slack.
        expected = self.num_frames / self.fps_native
        tol = 1.0 / self.fps_native
        if not math.isfinite(self.duration_s) or abs(self.duration_s - expected) > tol + 1e-9:
            raise CatalogError(
                f"record '{self.video_id}': duration_s={self.duration_s} does not match "
                f"num_frames/fps_native={expected:.4f} within one frame period"
            )


@dataclass
class SubsetManifest:
    subset_id: str
    display_name: str
    intended_clip_seconds: float
    record_ids: list[str] = field(default_factory=list)


@dataclass
class FrameSequence:
    """Decoded frames, shape (T, H, W, C), float32 in [0,1]."""

    frames: np.ndarray
    direction: Direction
    source_video_id: str

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])

    def reversed_copy(self) -> "FrameSequence":
        return FrameSequence(
            frames=self.frames[::-1].copy(),
            direction="forward" if self.direction == "reversed" else "reversed",
            source_video_id=self.source_video_id,
        )


@dataclass
class Catalog:
    subsets: list[SubsetManifest]
    records: list[VideoRecord]

    def record(self, video_id: str) -> VideoRecord:
        try:
            return self._by_id[video_id]
        except AttributeError:
            self._by_id = {r.video_id: r for r in self.records}
            return self._by_id[video_id]

    def subset_of(self, video_id: str) -> str:
        return self.record(video_id).subset_id

    def records_in(self, subset_id: str) -> list[VideoRecord]:
        return [r for r in self.records if r.subset_id == subset_id]


def load_manifest(path, require_captions: bool = True) -> Catalog:
    """Load and validate a manifest file.

    Subset declarations form a header block ({"kind": "subset", ...} lines);
    every following {"kind": "video", ...} line must reference a declared
    subset. Validation errors always name the offending record.
    """
    path = Path(path)
    if not path.exists():
        raise CatalogError(f"manifest not found: {path}")
    subsets: dict[str, SubsetManifest] = {}
    records: list[VideoRecord] = []
    seen_ids: set[str] = set()
    for obj in read_lines(path):
        kind = obj.get("kind")
        if kind == "subset":
            sid = obj["subset_id"]
            if sid in subsets:
                raise CatalogError(f"subset '{sid}' declared twice")
            subsets[sid] = SubsetManifest(
                subset_id=sid,
                display_name=obj.get("display_name", sid),
                intended_clip_seconds=float(obj.get("intended_clip_seconds", 0.0)),
            )
        elif kind == "video":
            rec = VideoRecord(
                video_id=str(obj["video_id"]),
                subset_id=str(obj["subset_id"]),
                uri=str(obj["uri"]),
                caption=str(obj.get("caption", "")),
                duration_s=float(obj["duration_s"]),
                fps_native=float(obj["fps_native"]),
                num_frames=int(obj["num_frames"]),
                width=int(obj["width"]),
                height=int(obj["height"]),
            )
            rec.validate(require_caption=require_captions)
            if rec.video_id in seen_ids:
                raise CatalogError(f"duplicate video_id '{rec.video_id}'")
            seen_ids.add(rec.video_id)
            if rec.subset_id not in subsets:
                raise CatalogError(
                    f"record '{rec.video_id}' references undeclared subset '{rec.subset_id}'"
                )
            subsets[rec.subset_id].record_ids.append(rec.video_id)
            records.append(rec)
        else:
            raise CatalogError(f"manifest line with unknown kind: {obj!r}")
    return Catalog(subsets=list(subsets.values()), records=records)


def save_manifest(path, catalog: Catalog) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for s in catalog.subsets:
            fh.write(
                dumps_line(
                    {
                        "kind": "subset",
                        "subset_id": s.subset_id,
                        "display_name": s.display_name,
                        "intended_clip_seconds": s.intended_clip_seconds,
                    }
                )
                + "\n"
            )
        for r in catalog.records:
            fh.write(
                dumps_line(
                    {
                        "kind": "video",
                        "video_id": r.video_id,
                        "subset_id": r.subset_id,
                        "uri": r.uri,
                        "caption": r.caption,
                        "duration_s": r.duration_s,
                        "fps_native": r.fps_native,
                        "num_frames": r.num_frames,
                        "width": r.width,
                        "height": r.height,
                    }
                )
                + "\n"
            )


def _to_unit_float(frames: np.ndarray) -> np.ndarray:
    if frames.ndim == 3:
        frames = frames[..., None]
    if frames.ndim != 4:
        raise CatalogError(f"expected frames with 3 or 4 dims, got shape {frames.shape}")
    if frames.dtype == np.uint8:
        return frames.astype(np.float32) / 255.0
    frames = frames.astype(np.float32)
    if frames.size and (frames.min() < -1e-6 or frames.max() > 1.0 + 1e-6):
        raise CatalogError("float frames must already be normalized to [0,1]")
    return np.clip(frames, 0.0, 1.0)


def _decode_media_file(path: Path) -> np.ndarray:
    suffix = path.suffix.lower()
    if suffix == ".npy":
        return np.load(path)
    if suffix == ".npz":
        with np.load(path) as data:
            return data["frames"]
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg"))
        if not files:
            raise CatalogError(f"no image frames in directory {path}")
        import cv2

        frames = []
        for f in files:
            img = cv2.imread(str(f), cv2.IMREAD_COLOR)
            if img is None:
                raise CatalogError(f"unreadable image frame: {f}")
            frames.append(cv2.cvtColor(img, cv2.COLOR_BGR2RGB))
        return np.stack(frames)
    import cv2

    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise CatalogError(f"unreadable media file: {path}")
    frames = []
    try:
        while True:
            ok, img = cap.read()
            if not ok:
                break
            frames.append(cv2.cvtColor(img, cv2.COLOR_BGR2RGB))
    finally:
        cap.release()
    if not frames:
        raise CatalogError(f"no frames decoded from {path}")
    return np.stack(frames)


def decode(record: VideoRecord, direction: Direction = "forward") -> FrameSequence:
    """Decode a record's media into ordered frames.

    Reversal is performed on the decoded pixel frames: the reversed sequence
    holds the same per-frame content in permuted order, so reversing twice
    reproduces the forward sequence exactly.
    """
    if direction not in ("forward", "reversed"):
        raise ValueError(f"direction must be 'forward' or 'reversed', got {direction!r}")
    try:
        raw = _decode_media_file(Path(record.uri))
    except (OSError, ValueError) as exc:
        if isinstance(exc, CatalogError):
            raise
        raise CatalogError(f"record '{record.video_id}': cannot decode {record.uri}: {exc}") from exc
    if raw.shape[0] < 2:
        raise CatalogError(f"record '{record.video_id}': decoded frame count {raw.shape[0]} < 2")
    frames = _to_unit_float(raw)
    if direction == "reversed":
        frames = frames[::-1].copy()
    return FrameSequence(frames=np.ascontiguousarray(frames), direction=direction, source_video_id=record.video_id)
