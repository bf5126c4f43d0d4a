"""Annotation records shared between the service and the metrics code."""

from dataclasses import dataclass
from pathlib import Path

from ..lineio import read_lines

CHOICES = ("A", "B", "unknown")
DEFAULT_REPLAY_LIMIT = 3


@dataclass
class DirectionJudgment:
    annotator_id: str
    video_id: str
    shown_order: str  # slot ("A" or "B") that held the true forward clip
    choice: str  # slot the annotator called reversed, or "unknown"
    replays_a: int
    replays_b: int
    prompt_shown: str
    timestamp: float

    def validate(self, replay_limit: int = DEFAULT_REPLAY_LIMIT) -> None:
        if self.choice not in CHOICES:
            raise ValueError(f"choice must be one of {CHOICES}, got {self.choice!r}")
        if self.shown_order not in ("A", "B"):
            raise ValueError(f"shown_order must be 'A' or 'B', got {self.shown_order!r}")
        if not (0 <= self.replays_a <= replay_limit and 0 <= self.replays_b <= replay_limit):
            raise ValueError(
                f"replay counts ({self.replays_a}, {self.replays_b}) exceed the limit of {replay_limit}"
            )

    def resolve(self) -> str:
        """'correct' | 'incorrect' | 'unknown' against the ground-truth slot."""
        if self.choice == "unknown":
            return "unknown"
        reversed_slot = "B" if self.shown_order == "A" else "A"
        return "correct" if self.choice == reversed_slot else "incorrect"

    def to_dict(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "video_id": self.video_id,
            "shown_order": self.shown_order,
            "choice": self.choice,
            "replays_a": self.replays_a,
            "replays_b": self.replays_b,
            "prompt_shown": self.prompt_shown,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "DirectionJudgment":
        return cls(
            annotator_id=str(obj["annotator_id"]),
            video_id=str(obj["video_id"]),
            shown_order=str(obj["shown_order"]),
            choice=str(obj["choice"]),
            replays_a=int(obj["replays_a"]),
            replays_b=int(obj["replays_b"]),
            prompt_shown=str(obj.get("prompt_shown", "")),
            timestamp=float(obj.get("timestamp", 0.0)),
        )


def load_direction_judgments(path) -> list[DirectionJudgment]:
    return [DirectionJudgment.from_dict(obj) for obj in read_lines(Path(path))]
