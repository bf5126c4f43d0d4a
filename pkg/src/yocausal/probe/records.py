"""Probe configuration and result records."""

from dataclasses import dataclass, field
from pathlib import Path

from ..lineio import append_line, read_lines


@dataclass(frozen=True)
class ProbeConfig:
    K: int = 10  # timesteps sampled per video
    n_noise: int = 1  # noise draws per timestep
    base_seed: int = 0
    prompt_mode: str = "caption"  # "caption" | "null"
    t_exclusion: float = 0.0  # extra fraction of the schedule excluded at both ends
    check_determinism: bool = True

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.n_noise < 1:
            raise ValueError("n_noise must be >= 1")
        if self.prompt_mode not in ("caption", "null"):
            raise ValueError(f"prompt_mode must be 'caption' or 'null', got {self.prompt_mode!r}")
        if not 0.0 <= self.t_exclusion < 0.5:
            raise ValueError("t_exclusion must lie in [0, 0.5)")


@dataclass
class LossRecord:
    video_id: str
    model_id: str
    direction: str
    timestep_fracs: list[float]
    per_timestep_loss: list[float]
    mean_loss: float
    window_count: int


@dataclass
class PairOutcome:
    video_id: str
    forward_loss: float
    reversed_loss: float
    correct: bool  # strictly higher loss on the reversed sequence


def make_outcome(video_id: str, forward_loss: float, reversed_loss: float) -> PairOutcome:
    return PairOutcome(
        video_id=video_id,
        forward_loss=forward_loss,
        reversed_loss=reversed_loss,
        correct=reversed_loss > forward_loss,
    )


def append_loss_record(path, rec: LossRecord, prompt_mode: str, base_seed: int) -> None:
    append_line(
        path,
        {
            "video_id": rec.video_id,
            "model_id": rec.model_id,
            "direction": rec.direction,
            "mean_loss": rec.mean_loss,
            "per_timestep_loss": rec.per_timestep_loss,
            "window_count": rec.window_count,
            "prompt_mode": prompt_mode,
            "base_seed": base_seed,
        },
    )


def load_loss_records(path) -> list[dict]:
    return list(read_lines(Path(path)))


def outcomes_from_loss_file(path) -> list[PairOutcome]:
    """Pair forward/reversed loss rows per video into outcomes."""
    by_video: dict[str, dict[str, float]] = {}
    for row in load_loss_records(path):
        by_video.setdefault(row["video_id"], {})[row["direction"]] = float(row["mean_loss"])
    outcomes = []
    for vid in sorted(by_video):
        pair = by_video[vid]
        if "forward" not in pair or "reversed" not in pair:
            raise ValueError(f"video '{vid}' is missing a direction in {path}")
        outcomes.append(make_outcome(vid, pair["forward"], pair["reversed"]))
    return outcomes
