"""Durable append-only persistence for annotations.

Every accepted judgment or ranking is appended to a line-delimited log and
flushed before the request is acknowledged; nothing is ever mutated in place,
so re-exports are supersets of earlier exports and the service survives
restarts.
"""

import threading
from pathlib import Path

from ..aggregate import PreferenceRanking
from ..lineio import append_line, dumps_line, read_lines
from .records import DirectionJudgment


class DuplicateSubmission(ValueError):
    pass


class AnnotationStore:
    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.direction_path = self.data_dir / "direction_judgments.jsonl"
        self.ranking_path = self.data_dir / "preference_rankings.jsonl"
        self._lock = threading.Lock()
        self._judgments: dict[tuple[str, str], DirectionJudgment] = {}
        self._rankings: dict[tuple[str, str], PreferenceRanking] = {}
        if self.direction_path.exists():
            for obj in read_lines(self.direction_path):
                j = DirectionJudgment.from_dict(obj)
                self._judgments[(j.annotator_id, j.video_id)] = j
        if self.ranking_path.exists():
            for obj in read_lines(self.ranking_path):
                r = PreferenceRanking(
                    annotator_id=str(obj["annotator_id"]),
                    prompt_id=str(obj["prompt_id"]),
                    ranks={str(k): int(v) for k, v in obj["ranks"].items()},
                )
                self._rankings[(r.annotator_id, r.prompt_id)] = r

    def has_judgment(self, annotator_id: str, video_id: str) -> bool:
        with self._lock:
            return (annotator_id, video_id) in self._judgments

    def judged_videos(self, annotator_id: str) -> set[str]:
        with self._lock:
            return {vid for (ann, vid) in self._judgments if ann == annotator_id}

    def add_judgment(self, judgment: DirectionJudgment) -> None:
        with self._lock:
            key = (judgment.annotator_id, judgment.video_id)
            if key in self._judgments:
                raise DuplicateSubmission(
                    f"annotator '{judgment.annotator_id}' already judged video '{judgment.video_id}'"
                )
            append_line(self.direction_path, judgment.to_dict())
            self._judgments[key] = judgment

    def has_ranking(self, annotator_id: str, prompt_id: str) -> bool:
        with self._lock:
            return (annotator_id, prompt_id) in self._rankings

    def ranked_prompts(self, annotator_id: str) -> set[str]:
        with self._lock:
            return {pid for (ann, pid) in self._rankings if ann == annotator_id}

    def add_ranking(self, ranking: PreferenceRanking) -> None:
        with self._lock:
            key = (ranking.annotator_id, ranking.prompt_id)
            if key in self._rankings:
                raise DuplicateSubmission(
                    f"annotator '{ranking.annotator_id}' already ranked prompt '{ranking.prompt_id}'"
                )
            append_line(
                self.ranking_path,
                {"annotator_id": ranking.annotator_id, "prompt_id": ranking.prompt_id, "ranks": ranking.ranks},
            )
            self._rankings[key] = ranking

    def export(self, kind: str) -> str:
        """Byte-stable line-delimited export with a schema header line."""
        with self._lock:
            if kind == "direction":
                header = {
                    "schema": "direction_judgment",
                    "fields": [
                        "annotator_id",
                        "video_id",
                        "shown_order",
                        "choice",
                        "replays_a",
                        "replays_b",
                        "prompt_shown",
                        "timestamp",
                    ],
                }
                rows = [j.to_dict() for j in self._judgments.values()]
            elif kind == "preference":
                header = {"schema": "preference_ranking", "fields": ["annotator_id", "prompt_id", "ranks"]}
                rows = [
                    {"annotator_id": r.annotator_id, "prompt_id": r.prompt_id, "ranks": r.ranks}
                    for r in self._rankings.values()
                ]
            else:
                raise ValueError(f"unknown export kind {kind!r}; expected 'direction' or 'preference'")
        lines = [dumps_line({"_header": header})]
        lines.extend(dumps_line(row) for row in rows)
        return "\n".join(lines) + "\n"
